#pragma once

#include "facegen/core/archive.hpp"
#include "facegen/core/schema.hpp"
#include "facegen/nnet/mlp.hpp"
#include "facegen/textparse/pairs.hpp"

#include <Eigen/Core>

#include <cstdint>
#include <functional>
#include <string_view>
#include <vector>

namespace facegen {

struct ParserTrainConfig {
    int hidden = 128;
    int hidden_layers = 6;
    int epochs = 20;
    int batch = 128;
    double lr = 1e-3;
    int decay_epoch = 10;  // lr halves after this many epochs
    double input_gain = 8.0;
    std::uint64_t seed = 1;
};

// Mean over attribute rows (and batch columns) of the cross-entropy between
// the row softmax of the logits and the one-hot code row. logits and target
// are (p*q) x batch, row-major within each column. Writes dL/dlogits.
double row_softmax_cross_entropy(const Eigen::MatrixXd& logits, const Eigen::MatrixXd& target, int rows,
                                 Eigen::MatrixXd* grad);

class LearnedParser {
   public:
    LearnedParser(MlpNet net, const AttributeSchema& schema, double input_gain);

    const MlpNet& net() const { return net_; }
    MlpNet& net() { return net_; }
    double input_gain() const { return gain_; }

    Eigen::MatrixXd features(const std::vector<std::string_view>& texts) const;
    // Row-wise argmax restricted to each attribute's valid options.
    DescriptiveCode decode(const Eigen::Ref<const Eigen::VectorXd>& logits) const;
    DescriptiveCode parse(std::string_view text) const;
    std::vector<DescriptiveCode> parse_batch(const std::vector<std::string_view>& texts) const;

    Archive to_archive() const;
    // Throws ValidationError when the archive's schema or arity differs.
    static LearnedParser from_archive(const Archive& a, const AttributeSchema& schema);

   private:
    MlpNet net_;
    const AttributeSchema* schema_;
    double gain_;
};

struct ParserTrainResult {
    LearnedParser parser;
    std::vector<double> epoch_loss;  // mean training loss per epoch
};

using EpochCallback = std::function<void(int epoch, double loss)>;

// Throws TrainingDiverged (with the epoch index) on a non-finite loss.
ParserTrainResult train_parser(const std::vector<TextCodePair>& pairs, const AttributeSchema& schema,
                               const ParserTrainConfig& cfg, const EpochCallback& on_epoch = {});

// Fraction of correctly predicted rows, per attribute.
std::vector<double> per_attribute_accuracy(const std::vector<DescriptiveCode>& predicted,
                                           const std::vector<DescriptiveCode>& truth);

}  // namespace facegen
