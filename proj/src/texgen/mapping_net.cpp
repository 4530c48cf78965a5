#include "facegen/texgen/mapping_net.hpp"

#include "facegen/core/error.hpp"
#include "facegen/core/rng.hpp"

#include <cmath>
#include <numeric>

namespace facegen {

TextureTarget texture_target(const TextureModel& model, const RgbImage& image) {
    const auto& lm = model.linear();
    if (image.width != model.width() || image.height != model.height())
        throw ValidationError("texture resolution does not match the texture model");
    const Eigen::VectorXd d = image.flat() - lm.mean();
    TextureTarget t;
    t.coeffs = lm.basis().transpose() * d;
    t.residual_sq = std::max(0.0, d.squaredNorm() - t.coeffs.squaredNorm());
    return t;
}

double texture_l2(const Eigen::VectorXd& t, const TextureModel& model, const TextureTarget& target,
                  Eigen::VectorXd* grad) {
    const auto& sigma = model.linear().sigma();
    if (t.size() != sigma.size()) throw ArgumentError("texture parameter vector has the wrong length");
    const double p = static_cast<double>(model.linear().dim());
    const Eigen::VectorXd e = sigma.cwiseProduct(t) - target.coeffs;
    if (grad) *grad = 2.0 * sigma.cwiseProduct(e) / p;
    return (e.squaredNorm() + target.residual_sq) / p;
}

TextureTrainResult train_mapping_net(const std::vector<RgbImage>& textures, const std::vector<DescriptiveCode>& codes,
                                     const TextureModel& model, const AttributeSchema& schema,
                                     const TextureTrainConfig& cfg, const TrainLogCallback& on_epoch) {
    if (textures.empty() || textures.size() != codes.size()) throw ArgumentError("need one code per training texture");
    const auto rows = schema.rows_of(Branch::texture);
    std::vector<int> dims{static_cast<int>(rows.size() * kMaxOptions) + cfg.noise_dim};
    for (int i = 0; i < cfg.hidden_layers; ++i) dims.push_back(cfg.hidden);
    dims.push_back(model.components());
    TextureTrainResult result{
        CodeRegressor(MlpNet(dims, Rng::mix(cfg.seed, 1)), schema, Branch::texture, cfg.noise_dim, cfg.code_gain), {}};
    MlpNet& net = result.net.net();

    const std::size_t n = textures.size();
    std::vector<TextureTarget> targets;
    targets.reserve(n);
    for (const auto& tex : textures) targets.push_back(texture_target(model, tex));

    Rng rng(Rng::mix(cfg.seed, 2));
    std::vector<std::size_t> order(n);
    std::iota(order.begin(), order.end(), std::size_t{0});
    long step = 0;
    Tape tape;
    for (int epoch = 0; epoch < cfg.epochs; ++epoch) {
        const double lr = epoch < cfg.epochs / 2 ? cfg.lr : 0.5 * cfg.lr;
        rng.shuffle(order);
        TrainLogRecord rec;
        rec.epoch = epoch + 1;
        for (std::size_t start = 0; start < n; start += cfg.batch) {
            const std::size_t b = std::min<std::size_t>(cfg.batch, n - start);
            Eigen::MatrixXd x(net.input_dim(), static_cast<Eigen::Index>(b));
            for (std::size_t k = 0; k < b; ++k) {
                const DescriptiveCode dropped = drop_rows(codes[order[start + k]], rows, cfg.drop_prob, rng);
                x.col(static_cast<Eigen::Index>(k)) =
                    result.net.input(dropped, noise_vector(rng.next_u64(), cfg.noise_dim));
            }
            const Eigen::MatrixXd t = net.forward(x, &tape);
            Eigen::MatrixXd dt(t.rows(), t.cols());
            double loss = 0.0;
            for (std::size_t k = 0; k < b; ++k) {
                Eigen::VectorXd g;
                loss += texture_l2(t.col(static_cast<Eigen::Index>(k)), model, targets[order[start + k]], &g);
                dt.col(static_cast<Eigen::Index>(k)) = g / static_cast<double>(b);
            }
            ++step;
            if (!std::isfinite(loss)) throw TrainingDiverged("texture loss is not finite", static_cast<std::size_t>(step));
            net.adam_step(net.backward(tape, dt), lr);
            rec.l1 += loss;
        }
        rec.step = step;
        rec.l1 /= static_cast<double>(n);
        rec.total = rec.l1;
        result.log.push_back(rec);
        if (on_epoch) on_epoch(rec);
    }
    return result;
}

TexturePrediction predict_texture(const CodeRegressor& net, const TextureModel& model, const DescriptiveCode& code,
                                  const Eigen::VectorXd& noise) {
    TexturePrediction p;
    p.t = net.predict(code, noise);
    p.image = model.synthesize(p.t).clamped();
    return p;
}

TexturePrediction predict_texture(const CodeRegressor& net, const TextureModel& model, const DescriptiveCode& code,
                                  std::uint64_t noise_seed) {
    return predict_texture(net, model, code, noise_vector(noise_seed, net.noise_dim()));
}

}  // namespace facegen
