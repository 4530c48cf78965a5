#include "facegen/textparse/learned_parser.hpp"

#include "facegen/core/error.hpp"
#include "facegen/core/rng.hpp"
#include "facegen/textparse/embedding.hpp"

#include <cmath>
#include <numeric>

namespace facegen {

double row_softmax_cross_entropy(const Eigen::MatrixXd& logits, const Eigen::MatrixXd& target, int rows,
                                 Eigen::MatrixXd* grad) {
    const int q = static_cast<int>(logits.rows()) / rows;
    const double scale = 1.0 / (static_cast<double>(rows) * static_cast<double>(logits.cols()));
    if (grad) grad->resize(logits.rows(), logits.cols());
    double loss = 0.0;
    for (Eigen::Index b = 0; b < logits.cols(); ++b) {
        for (int r = 0; r < rows; ++r) {
            const auto z = logits.col(b).segment(r * q, q);
            const auto t = target.col(b).segment(r * q, q);
            const double mx = z.maxCoeff();
            const Eigen::VectorXd e = (z.array() - mx).exp();
            const double sum = e.sum();
            const double lse = mx + std::log(sum);
            loss += -(t.array() * (z.array() - lse)).sum();
            if (grad) grad->col(b).segment(r * q, q) = scale * (e / sum * t.sum() - t);
        }
    }
    return loss * scale;
}

LearnedParser::LearnedParser(MlpNet net, const AttributeSchema& schema, double input_gain)
    : net_(std::move(net)), schema_(&schema), gain_(input_gain) {
    if (net_.input_dim() != kEmbeddingDim ||
        net_.output_dim() != static_cast<int>(schema.size() * kMaxOptions))
        throw ValidationError("parser network arity does not match the schema (" + std::to_string(net_.input_dim()) +
                              " -> " + std::to_string(net_.output_dim()) + ")");
}

Eigen::MatrixXd LearnedParser::features(const std::vector<std::string_view>& texts) const {
    Eigen::MatrixXd x(kEmbeddingDim, static_cast<Eigen::Index>(texts.size()));
    for (std::size_t i = 0; i < texts.size(); ++i) x.col(static_cast<Eigen::Index>(i)) = gain_ * embed_text(texts[i]);
    return x;
}

DescriptiveCode LearnedParser::decode(const Eigen::Ref<const Eigen::VectorXd>& logits) const {
    auto code = DescriptiveCode::unspecified(*schema_);
    for (std::size_t r = 0; r < schema_->size(); ++r) {
        const int n = static_cast<int>((*schema_)[r].option_count());
        int best = 0;
        for (int o = 1; o < n; ++o)
            if (logits[r * kMaxOptions + o] > logits[r * kMaxOptions + best]) best = o;
        code[r] = best;
    }
    return code;
}

DescriptiveCode LearnedParser::parse(std::string_view text) const { return parse_batch({text}).front(); }

std::vector<DescriptiveCode> LearnedParser::parse_batch(const std::vector<std::string_view>& texts) const {
    const Eigen::MatrixXd logits = net_.forward(features(texts));
    std::vector<DescriptiveCode> out;
    out.reserve(texts.size());
    for (Eigen::Index i = 0; i < logits.cols(); ++i) out.push_back(decode(logits.col(i)));
    return out;
}

Archive LearnedParser::to_archive() const {
    Archive a = net_.to_archive("text_parser");
    a.meta()["input_gain"] = gain_;
    a.meta()["schema"] = schema_->fingerprint();
    return a;
}

LearnedParser LearnedParser::from_archive(const Archive& a, const AttributeSchema& schema) {
    if (a.kind() != "text_parser") throw ValidationError("not a text parser archive");
    if (a.meta().value("schema", std::string()) != schema.fingerprint())
        throw ValidationError("parser was trained with a different attribute schema");
    return LearnedParser(MlpNet::from_archive(a), schema, a.meta().at("input_gain").get<double>());
}

ParserTrainResult train_parser(const std::vector<TextCodePair>& pairs, const AttributeSchema& schema,
                               const ParserTrainConfig& cfg, const EpochCallback& on_epoch) {
    if (pairs.empty()) throw ArgumentError("no training pairs");
    if (cfg.batch < 1 || cfg.epochs < 1) throw ArgumentError("batch and epochs must be positive");
    std::vector<int> dims{kEmbeddingDim};
    for (int i = 0; i < cfg.hidden_layers; ++i) dims.push_back(cfg.hidden);
    dims.push_back(static_cast<int>(schema.size() * kMaxOptions));
    LearnedParser parser(MlpNet(dims, Rng::mix(cfg.seed, 1)), schema, cfg.input_gain);

    const auto n = static_cast<Eigen::Index>(pairs.size());
    Eigen::MatrixXd x(kEmbeddingDim, n);
    Eigen::MatrixXd y(static_cast<Eigen::Index>(schema.size() * kMaxOptions), n);
    for (Eigen::Index i = 0; i < n; ++i) {
        x.col(i) = cfg.input_gain * embed_text(pairs[i].text);
        pairs[i].code.validate(schema);
        y.col(i) = pairs[i].code.flatten([&] {
            std::vector<std::size_t> all(schema.size());
            std::iota(all.begin(), all.end(), std::size_t{0});
            return all;
        }());
    }

    ParserTrainResult result{std::move(parser), {}};
    MlpNet& net = result.parser.net();
    Rng rng(Rng::mix(cfg.seed, 2));
    std::vector<Eigen::Index> order(n);
    std::iota(order.begin(), order.end(), Eigen::Index{0});
    Eigen::MatrixXd xb, yb, grad;
    Tape tape;
    for (int epoch = 0; epoch < cfg.epochs; ++epoch) {
        const double lr = epoch < cfg.decay_epoch ? cfg.lr : cfg.lr * 0.5;
        rng.shuffle(order);
        double total = 0.0;
        for (Eigen::Index start = 0; start < n; start += cfg.batch) {
            const Eigen::Index b = std::min<Eigen::Index>(cfg.batch, n - start);
            xb.resize(x.rows(), b);
            yb.resize(y.rows(), b);
            for (Eigen::Index k = 0; k < b; ++k) {
                xb.col(k) = x.col(order[start + k]);
                yb.col(k) = y.col(order[start + k]);
            }
            const Eigen::MatrixXd logits = net.forward(xb, &tape);
            const double loss = row_softmax_cross_entropy(logits, yb, static_cast<int>(schema.size()), &grad);
            if (!std::isfinite(loss)) throw TrainingDiverged("text parser loss is not finite", epoch + 1);
            total += loss * static_cast<double>(b);
            net.adam_step(net.backward(tape, grad), lr);
        }
        result.epoch_loss.push_back(total / static_cast<double>(n));
        if (on_epoch) on_epoch(epoch + 1, result.epoch_loss.back());
    }
    return result;
}

std::vector<double> per_attribute_accuracy(const std::vector<DescriptiveCode>& predicted,
                                           const std::vector<DescriptiveCode>& truth) {
    if (predicted.size() != truth.size() || truth.empty()) throw ArgumentError("accuracy needs matched non-empty sets");
    std::vector<double> acc(truth.front().size(), 0.0);
    for (std::size_t i = 0; i < truth.size(); ++i)
        for (std::size_t r = 0; r < acc.size(); ++r) acc[r] += predicted[i][r] == truth[i][r] ? 1.0 : 0.0;
    for (auto& a : acc) a /= static_cast<double>(truth.size());
    return acc;
}

}  // namespace facegen
