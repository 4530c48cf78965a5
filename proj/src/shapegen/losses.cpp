#include "facegen/shapegen/losses.hpp"

#include "facegen/core/error.hpp"

#include <cmath>

namespace facegen {

namespace {
double sign(double x) { return x > 0.0 ? 1.0 : (x < 0.0 ? -1.0 : 0.0); }
}  // namespace

double weighted_l1(const Eigen::Ref<const Eigen::VectorXd>& pred, const Eigen::Ref<const Eigen::VectorXd>& gt,
                   const RegionMasks& masks, const RegionWeights& weights, Eigen::VectorXd* grad) {
    const std::size_t n = masks.region_of_vertex.size();
    if (static_cast<std::size_t>(pred.size()) != 3 * n || pred.size() != gt.size())
        throw ValidationError("weighted_l1: vertex arrays do not match the region masks");
    if (grad) grad->setZero(pred.size());
    double loss = 0.0;
    const double inv_n = 1.0 / static_cast<double>(n);
    for (std::size_t v = 0; v < n; ++v) {
        const auto r = static_cast<std::size_t>(masks.region_of_vertex[v]);
        if (r >= weights.alpha.size()) throw ValidationError("weighted_l1: unknown region label");
        const double a = weights.alpha[r];
        if (a == 0.0) continue;
        for (int c = 0; c < 3; ++c) {
            const double d = pred[3 * v + c] - gt[3 * v + c];
            loss += a * std::abs(d);
            if (grad) (*grad)[3 * v + c] = a * sign(d) * inv_n;
        }
    }
    return loss * inv_n;
}

double region_l1(const Eigen::Ref<const Eigen::VectorXd>& a, const Eigen::Ref<const Eigen::VectorXd>& b,
                 const std::vector<int>& vertices) {
    if (vertices.empty()) return 0.0;
    double s = 0.0;
    for (int v : vertices)
        for (int c = 0; c < 3; ++c) s += std::abs(a[3 * v + c] - b[3 * v + c]);
    return s / (3.0 * static_cast<double>(vertices.size()));
}

double rst_loss(const Eigen::Ref<const Eigen::VectorXd>& pred, const Eigen::Ref<const Eigen::VectorXd>& pos,
                const Eigen::Ref<const Eigen::VectorXd>& neg, const std::vector<int>& region, double margin,
                double lambda, Eigen::VectorXd* grad) {
    if (pred.size() != pos.size() || pred.size() != neg.size())
        throw ValidationError("rst_loss: meshes do not share a topology");
    if (region.empty()) throw ValidationError("rst_loss: empty region");
    for (int v : region)
        if (v < 0 || 3 * static_cast<Eigen::Index>(v) >= pred.size()) throw ValidationError("rst_loss: bad region");
    const double h = region_l1(pred, pos, region) - region_l1(pred, neg, region) + margin;
    if (h <= 0.0) return 0.0;
    if (grad) {
        const double k = lambda / (3.0 * static_cast<double>(region.size()));
        for (int v : region)
            for (int c = 0; c < 3; ++c) {
                const Eigen::Index i = 3 * v + c;
                (*grad)[i] += k * (sign(pred[i] - pos[i]) - sign(pred[i] - neg[i]));
            }
    }
    return lambda * h;
}

FeatureRegion region_of_attribute(const std::string& name) {
    if (name.rfind("eye", 0) == 0) return FeatureRegion::eyes;
    if (name.rfind("nose", 0) == 0) return FeatureRegion::nose;
    if (name == "mouth_width" || name == "lip_thickness") return FeatureRegion::mouth;
    return FeatureRegion::other;
}

std::vector<std::vector<int>> antonym_negatives(const std::vector<DescriptiveCode>& codes,
                                                const AttributeSchema& schema) {
    std::vector<std::vector<int>> out(codes.size(), std::vector<int>(schema.size(), -1));
    for (std::size_t i = 0; i < codes.size(); ++i) {
        for (std::size_t a = 0; a < schema.size(); ++a) {
            const int anti = schema[a].antonym_of(codes[i][a]);
            if (anti < 0) continue;
            int best = -1;
            std::size_t best_d = 0;
            for (std::size_t j = 0; j < codes.size(); ++j) {
                if (codes[j][a] != anti) continue;
                std::size_t d = 0;
                for (std::size_t b = 0; b < schema.size(); ++b) d += (b != a && codes[j][b] != codes[i][b]) ? 1 : 0;
                if (best < 0 || d < best_d) best = static_cast<int>(j), best_d = d;
            }
            out[i][a] = best;
        }
    }
    return out;
}

RstCalibration calibrate_rst(const std::vector<FaceMesh>& meshes, const std::vector<DescriptiveCode>& codes,
                             const AttributeSchema& schema, const RegionMasks& masks) {
    if (meshes.size() != codes.size() || meshes.empty())
        throw ArgumentError("calibrate_rst needs one code per mesh");
    RstCalibration cal;
    std::array<std::vector<int>, kNumFeatureRegions> regions;
    for (std::size_t r = 0; r < kNumFeatureRegions; ++r) regions[r] = masks.select(static_cast<FeatureRegion>(r));

    const auto negatives = antonym_negatives(codes, schema);
    std::array<double, kNumFeatureRegions> gap{}, count{};
    for (std::size_t i = 0; i < meshes.size(); ++i)
        for (std::size_t a = 0; a < schema.size(); ++a) {
            const int j = negatives[i][a];
            if (j < 0 || schema[a].branch != Branch::shape) continue;
            const auto r = static_cast<std::size_t>(region_of_attribute(schema[a].name));
            gap[r] += region_l1(meshes[i].flat(), meshes[j].flat(), regions[r]);
            count[r] += 1.0;
        }

    Eigen::VectorXd mean = Eigen::VectorXd::Zero(meshes.front().vertices.size());
    for (const auto& m : meshes) mean += m.flat();
    mean /= static_cast<double>(meshes.size());
    for (std::size_t r = 0; r < kNumFeatureRegions; ++r) {
        cal.margin[r] = count[r] > 0.0 ? gap[r] / count[r] : 0.0;
        double spread = 0.0;
        for (const auto& m : meshes) spread += region_l1(m.flat(), mean, regions[r]);
        spread /= static_cast<double>(meshes.size());
        cal.lambda[r] = spread > 0.0 ? 1.0 / spread : 1.0;
    }
    return cal;
}

}  // namespace facegen
