#pragma once

#include "facegen/core/archive.hpp"
#include "facegen/core/rng.hpp"
#include "facegen/core/face_template.hpp"
#include "facegen/core/schema.hpp"
#include "facegen/morphable/linear_model.hpp"
#include "facegen/nnet/mlp.hpp"
#include "facegen/shapegen/losses.hpp"

#include <Eigen/Core>

#include <cstdint>
#include <functional>
#include <vector>

namespace facegen {

// Standard normal noise vector drawn from `seed`.
Eigen::VectorXd noise_vector(std::uint64_t seed, int dim);

// Replace each row of `code` listed in `rows` by "unspecified" with
// probability p.
DescriptiveCode drop_rows(const DescriptiveCode& code, const std::vector<std::size_t>& rows, double p, Rng& rng);

struct ShapeTrainConfig {
    RegionWeights weights;
    RstCalibration rst;
    double rst_weight = 0.1;
    int noise_dim = 512;
    int hidden = 128;
    int hidden_layers = 6;
    int epochs = 200;
    int batch = 16;
    double lr = 1e-3;
    double drop_prob = 0.0;  // chance of hiding each code row during training
    double code_gain = 8.0;  // multiplies the one-hot code entries at the input
    std::uint64_t seed = 1;
};

// Conditional regressor: flatten(rows of the code) ++ noise -> coefficients.
// Used for the shape branch (ShapePred) and the texture mapping net.
class CodeRegressor {
   public:
    CodeRegressor(MlpNet net, const AttributeSchema& schema, Branch branch, int noise_dim, double code_gain = 1.0);

    const MlpNet& net() const { return net_; }
    MlpNet& net() { return net_; }
    const std::vector<std::size_t>& rows() const { return rows_; }
    int noise_dim() const { return noise_dim_; }
    double code_gain() const { return code_gain_; }
    Branch branch() const { return branch_; }

    Eigen::VectorXd input(const DescriptiveCode& code, const Eigen::VectorXd& noise) const;
    Eigen::VectorXd predict(const DescriptiveCode& code, const Eigen::VectorXd& noise) const;
    // Noise from noise_vector(noise_seed, noise_dim).
    Eigen::VectorXd predict(const DescriptiveCode& code, std::uint64_t noise_seed) const;

    Archive to_archive(const std::string& kind) const;
    static CodeRegressor from_archive(const Archive& a, const AttributeSchema& schema, const std::string& kind);

   private:
    MlpNet net_;
    const AttributeSchema* schema_;
    Branch branch_;
    std::vector<std::size_t> rows_;
    int noise_dim_;
    double code_gain_;
};

struct TrainLogRecord {
    int epoch = 0;
    long step = 0;
    double l1 = 0.0;  // main loss term (weighted l1, or l2 for textures)
    double rst = 0.0;
    double total = 0.0;
};

using TrainLogCallback = std::function<void(const TrainLogRecord&)>;

struct ShapeTrainResult {
    CodeRegressor net;
    std::vector<TrainLogRecord> log;  // one per epoch
};

// ShapePred training: loss = weighted_l1(synthesize(s_hat), gt) + rst_weight *
// rst on a random feature region with an antonym negative. Gradients reach the
// net through the linear shape model. Throws TrainingDiverged with the step.
ShapeTrainResult train_shape_net(const std::vector<FaceMesh>& meshes, const std::vector<DescriptiveCode>& codes,
                                 const ShapeModel& model, const AttributeSchema& schema, const RegionMasks& masks,
                                 const ShapeTrainConfig& cfg, const TrainLogCallback& on_epoch = {});

// Per-sample shape loss and its gradient wrt the S-space prediction; shared by
// training and the gradient checks.
struct ShapeLossTerms {
    double l1 = 0.0;
    double rst = 0.0;
};
ShapeLossTerms shape_loss(const Eigen::VectorXd& s, const ShapeModel& model, const Eigen::VectorXd& gt,
                          const Eigen::VectorXd* neg, const std::vector<int>* region, double margin, double lambda,
                          const RegionMasks& masks, const RegionWeights& weights, double rst_weight,
                          Eigen::VectorXd* grad_s);

}  // namespace facegen
