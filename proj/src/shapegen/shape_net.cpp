#include "facegen/shapegen/shape_net.hpp"

#include "facegen/core/error.hpp"
#include "facegen/core/rng.hpp"

#include <cmath>
#include <numeric>

namespace facegen {

Eigen::VectorXd noise_vector(std::uint64_t seed, int dim) {
    Rng rng(seed);
    Eigen::VectorXd z(dim);
    for (int i = 0; i < dim; ++i) z[i] = rng.normal();
    return z;
}

DescriptiveCode drop_rows(const DescriptiveCode& code, const std::vector<std::size_t>& rows, double p, Rng& rng) {
    DescriptiveCode out = code;
    for (auto r : rows)
        if (rng.uniform() < p) out[r] = kUnspecified;
    return out;
}

CodeRegressor::CodeRegressor(MlpNet net, const AttributeSchema& schema, Branch branch, int noise_dim, double code_gain)
    : net_(std::move(net)),
      schema_(&schema),
      branch_(branch),
      rows_(schema.rows_of(branch)),
      noise_dim_(noise_dim),
      code_gain_(code_gain) {
    if (!(code_gain > 0.0) || !std::isfinite(code_gain)) throw ArgumentError("code gain must be positive");
    const int expected = static_cast<int>(rows_.size() * kMaxOptions) + noise_dim_;
    if (net_.input_dim() != expected)
        throw ValidationError("network input size " + std::to_string(net_.input_dim()) + " does not match " +
                              std::to_string(expected) + " (code rows + noise)");
}

Eigen::VectorXd CodeRegressor::input(const DescriptiveCode& code, const Eigen::VectorXd& noise) const {
    code.validate(*schema_);
    if (noise.size() != noise_dim_) throw ArgumentError("noise vector has the wrong length");
    Eigen::VectorXd x(net_.input_dim());
    x << code_gain_ * code.flatten(rows_), noise;
    return x;
}

Eigen::VectorXd CodeRegressor::predict(const DescriptiveCode& code, const Eigen::VectorXd& noise) const {
    return net_.forward(input(code, noise));
}

Eigen::VectorXd CodeRegressor::predict(const DescriptiveCode& code, std::uint64_t noise_seed) const {
    return predict(code, noise_vector(noise_seed, noise_dim_));
}

Archive CodeRegressor::to_archive(const std::string& kind) const {
    Archive a = net_.to_archive(kind);
    a.meta()["noise_dim"] = noise_dim_;
    a.meta()["code_gain"] = code_gain_;
    a.meta()["branch"] = std::string(to_string(branch_));
    a.meta()["schema"] = schema_->fingerprint();
    return a;
}

CodeRegressor CodeRegressor::from_archive(const Archive& a, const AttributeSchema& schema, const std::string& kind) {
    if (a.kind() != kind) throw ValidationError("expected a '" + kind + "' archive, found '" + a.kind() + "'");
    if (a.meta().value("schema", std::string()) != schema.fingerprint())
        throw ValidationError("network was trained with a different attribute schema");
    const auto branch = a.meta().at("branch").get<std::string>() == "shape" ? Branch::shape : Branch::texture;
    return CodeRegressor(MlpNet::from_archive(a), schema, branch, a.meta().at("noise_dim").get<int>(),
                         a.meta().value("code_gain", 1.0));
}

ShapeLossTerms shape_loss(const Eigen::VectorXd& s, const ShapeModel& model, const Eigen::VectorXd& gt,
                          const Eigen::VectorXd* neg, const std::vector<int>* region, double margin, double lambda,
                          const RegionMasks& masks, const RegionWeights& weights, double rst_weight,
                          Eigen::VectorXd* grad_s) {
    const Eigen::VectorXd v = model.linear().synthesize(s);
    Eigen::VectorXd gv;
    ShapeLossTerms t;
    t.l1 = weighted_l1(v, gt, masks, weights, grad_s ? &gv : nullptr);
    if (neg && region) {
        Eigen::VectorXd gr = Eigen::VectorXd::Zero(v.size());
        t.rst = rst_loss(v, gt, *neg, *region, margin, lambda, grad_s ? &gr : nullptr);
        if (grad_s) gv += rst_weight * gr;
    }
    if (grad_s) *grad_s = model.linear().pullback(gv);
    return t;
}

ShapeTrainResult train_shape_net(const std::vector<FaceMesh>& meshes, const std::vector<DescriptiveCode>& codes,
                                 const ShapeModel& model, const AttributeSchema& schema, const RegionMasks& masks,
                                 const ShapeTrainConfig& cfg, const TrainLogCallback& on_epoch) {
    if (meshes.empty() || meshes.size() != codes.size()) throw ArgumentError("need one code per training mesh");
    const auto rows = schema.rows_of(Branch::shape);
    std::vector<int> dims{static_cast<int>(rows.size() * kMaxOptions) + cfg.noise_dim};
    for (int i = 0; i < cfg.hidden_layers; ++i) dims.push_back(cfg.hidden);
    dims.push_back(model.components());
    ShapeTrainResult result{CodeRegressor(MlpNet(dims, Rng::mix(cfg.seed, 1)), schema, Branch::shape, cfg.noise_dim,
                                          cfg.code_gain),
                            {}};
    MlpNet& net = result.net.net();

    const std::size_t n = meshes.size();
    std::vector<Eigen::VectorXd> gt(n);
    for (std::size_t i = 0; i < n; ++i) gt[i] = meshes[i].flat();
    const auto negatives = antonym_negatives(codes, schema);
    std::array<std::vector<int>, kNumFeatureRegions> regions;
    std::array<std::vector<std::size_t>, kNumFeatureRegions> region_rows;
    for (std::size_t r = 0; r < kNumFeatureRegions; ++r) regions[r] = masks.select(static_cast<FeatureRegion>(r));
    for (auto a : rows) region_rows[static_cast<std::size_t>(region_of_attribute(schema[a].name))].push_back(a);

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
            std::vector<int> neg(b, -1);
            std::vector<std::size_t> region(b, 0);
            for (std::size_t k = 0; k < b; ++k) {
                const std::size_t i = order[start + k];
                const DescriptiveCode dropped = drop_rows(codes[i], rows, cfg.drop_prob, rng);
                const Eigen::VectorXd z = noise_vector(rng.next_u64(), cfg.noise_dim);
                x.col(static_cast<Eigen::Index>(k)) = result.net.input(dropped, z);
                region[k] = rng.below(kNumFeatureRegions);
                const auto& cand = region_rows[region[k]];
                if (!cand.empty()) {
                    const std::size_t a = cand[rng.below(cand.size())];
                    if (dropped[a] != kUnspecified) neg[k] = negatives[i][a];
                }
            }
            const Eigen::MatrixXd s = net.forward(x, &tape);
            Eigen::MatrixXd ds(s.rows(), s.cols());
            double l1 = 0.0, rst = 0.0;
            for (std::size_t k = 0; k < b; ++k) {
                const std::size_t i = order[start + k];
                const std::size_t r = region[k];
                Eigen::VectorXd g;
                const auto terms = shape_loss(s.col(static_cast<Eigen::Index>(k)), model, gt[i],
                                              neg[k] >= 0 ? &gt[neg[k]] : nullptr, &regions[r], cfg.rst.margin[r],
                                              cfg.rst.lambda[r], masks, cfg.weights, cfg.rst_weight, &g);
                ds.col(static_cast<Eigen::Index>(k)) = g / static_cast<double>(b);
                l1 += terms.l1;
                rst += terms.rst;
            }
            ++step;
            const double total = (l1 + cfg.rst_weight * rst) / static_cast<double>(b);
            if (!std::isfinite(total)) throw TrainingDiverged("shape loss is not finite", static_cast<std::size_t>(step));
            net.adam_step(net.backward(tape, ds), lr);
            rec.l1 += l1;
            rec.rst += rst;
        }
        rec.step = step;
        rec.l1 /= static_cast<double>(n);
        rec.rst /= static_cast<double>(n);
        rec.total = rec.l1 + cfg.rst_weight * rec.rst;
        result.log.push_back(rec);
        if (on_epoch) on_epoch(rec);
    }
    return result;
}

}  // namespace facegen
