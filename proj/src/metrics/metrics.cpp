#include "facegen/metrics/metrics.hpp"

#include "facegen/align/kdtree.hpp"
#include "facegen/core/error.hpp"

#include <cmath>

namespace facegen {

namespace {

double mean_nn_distance(const Vertices& from, const KdTree& to) {
    double sum = 0.0;
    for (Eigen::Index i = 0; i < from.rows(); ++i) sum += std::sqrt(to.nearest(from.row(i).transpose()).dist_sq);
    return sum / static_cast<double>(from.rows());
}

Vertices select_rows(const Vertices& v, const std::vector<int>& idx) {
    Vertices out(static_cast<Eigen::Index>(idx.size()), 3);
    for (std::size_t k = 0; k < idx.size(); ++k) {
        if (idx[k] < 0 || idx[k] >= v.rows()) throw ValidationError("vertex index out of range");
        out.row(static_cast<Eigen::Index>(k)) = v.row(idx[k]);
    }
    return out;
}

}  // namespace

double chamfer(const Vertices& a, const Vertices& b) {
    if (a.rows() == 0 || b.rows() == 0) throw ArgumentError("chamfer needs non-empty vertex sets");
    return mean_nn_distance(a, KdTree(b)) + mean_nn_distance(b, KdTree(a));
}

double chamfer(const FaceMesh& a, const FaceMesh& b) { return chamfer(a.vertices, b.vertices); }

double complete_rate(const Vertices& a, const Vertices& b, double threshold) {
    if (a.rows() == 0 || b.rows() == 0) throw ArgumentError("complete rate needs non-empty vertex sets");
    const KdTree tree(b);
    std::size_t hit = 0;
    for (Eigen::Index i = 0; i < a.rows(); ++i)
        if (std::sqrt(tree.nearest(a.row(i).transpose()).dist_sq) < threshold) ++hit;
    return static_cast<double>(hit) / static_cast<double>(a.rows());
}

double complete_rate(const FaceMesh& a, const FaceMesh& b, double threshold) {
    return complete_rate(a.vertices, b.vertices, threshold);
}

FaceRender render_for_identity(const FaceMesh& mesh, const RgbImage* texture, const std::vector<int>& landmarks,
                               const RenderView& view) {
    FaceRender r;
    const RgbImage gray(8, 8, 0.5, 0.5, 0.5);
    const RgbImage* tex = texture ? texture : (mesh.texture ? &*mesh.texture : &gray);
    r.image = render(mesh, tex, view).image;
    r.landmarks.resize(static_cast<Eigen::Index>(landmarks.size()), 3);
    for (std::size_t k = 0; k < landmarks.size(); ++k)
        r.landmarks.row(static_cast<Eigen::Index>(k)) = project(mesh.vertices.row(landmarks[k]).transpose(), view);
    return r;
}

Eigen::VectorXd GeometricPhotometricEmbedder::geometric(const Vertices& lm) const {
    const Eigen::Index n = lm.rows();
    Eigen::VectorXd d(n * (n - 1) / 2);
    Eigen::Index k = 0;
    for (Eigen::Index i = 0; i < n; ++i)
        for (Eigen::Index j = i + 1; j < n; ++j) d[k++] = (lm.row(i) - lm.row(j)).norm();
    const double norm = d.norm();
    if (norm > 0.0) d /= norm;
    return d;
}

Eigen::VectorXd GeometricPhotometricEmbedder::photometric(const RgbImage& image) const {
    Eigen::VectorXd g = Eigen::VectorXd::Zero(thumb_ * thumb_);
    if (image.empty()) return g;
    Eigen::VectorXd count = Eigen::VectorXd::Zero(thumb_ * thumb_);
    for (int y = 0; y < image.height; ++y)
        for (int x = 0; x < image.width; ++x) {
            const int cell = (y * thumb_ / image.height) * thumb_ + x * thumb_ / image.width;
            g[cell] += luminance(image.at(x, y, 0), image.at(x, y, 1), image.at(x, y, 2));
            count[cell] += 1.0;
        }
    g = g.cwiseQuotient(count.cwiseMax(1.0));
    g.array() -= g.mean();
    const double norm = g.norm();
    if (norm > 1e-12) g /= norm;
    else g.setZero();
    return g;
}

Eigen::VectorXd GeometricPhotometricEmbedder::embed(const FaceRender& r) const {
    const Eigen::VectorXd geo = geometric(r.landmarks), photo = photometric(r.image);
    Eigen::VectorXd out(geo.size() + photo.size());
    out << geo / std::sqrt(2.0), photo / std::sqrt(2.0);
    return out;
}

double identity_similarity(const IdentityEmbedder& embedder, const FaceRender& a, const FaceRender& b) {
    const Eigen::VectorXd ea = embedder.embed(a), eb = embedder.embed(b);
    if (ea.size() != eb.size()) throw ValidationError("identity embeddings differ in length");
    const double na = ea.norm(), nb = eb.norm();
    if (na == 0.0 || nb == 0.0) return 0.0;
    return std::clamp(ea.dot(eb) / (na * nb), -1.0, 1.0);
}

EvalConfig EvalConfig::for_template(const FaceTemplate& face, bool front_only) {
    EvalConfig cfg;
    cfg.pupils = face.masks().pupils;
    cfg.landmarks = face.masks().landmark_indices;
    if (front_only) cfg.front_mask = face.masks().front_face();
    return cfg;
}

EvalReport evaluate(const FaceMesh& pred, const FaceMesh& gt, const EvalConfig& cfg) {
    if (pred.num_vertices() == 0 || gt.num_vertices() == 0) throw ArgumentError("evaluate needs non-empty meshes");
    EvalReport rep;

    const FaceMesh scaled = interpupillary_scale(pred, gt, cfg.pupils);
    const double ipd_scale = (scaled.vertices.row(cfg.pupils[0]) - scaled.vertices.row(cfg.pupils[1])).norm() /
                             (pred.vertices.row(cfg.pupils[0]) - pred.vertices.row(cfg.pupils[1])).norm();
    SimilarityTransform total;
    total.scale = ipd_scale;

    Vertices moved = scaled.vertices;
    if (pred.num_vertices() == gt.num_vertices() && cfg.landmarks.size() >= 3) {
        const SimilarityTransform rigid =
            procrustes(select_rows(moved, cfg.landmarks), select_rows(gt.vertices, cfg.landmarks), false);
        moved = rigid.apply(moved);
        total = rigid.compose(total);
    } else {
        SimilarityTransform shift;
        shift.translation = (gt.vertices.colwise().mean() - moved.colwise().mean()).transpose();
        moved = shift.apply(moved);
        total = shift.compose(total);
    }
    const IcpResult fine = icp(moved, gt.vertices, cfg.icp);
    moved = fine.transform.apply(moved);
    total = fine.transform.compose(total);
    rep.alignment = total;

    const bool masked = !cfg.front_mask.empty() && pred.num_vertices() == gt.num_vertices();
    const Vertices a = masked ? select_rows(moved, cfg.front_mask) : moved;
    const Vertices b = masked ? select_rows(gt.vertices, cfg.front_mask) : gt.vertices;
    rep.cd = chamfer(a, b);
    rep.cr = complete_rate(a, b, cfg.cr_threshold);

    FaceMesh aligned = pred;
    aligned.vertices = moved;
    const GeometricPhotometricEmbedder fallback;
    const IdentityEmbedder& emb = cfg.embedder ? *cfg.embedder : fallback;
    const std::vector<int>& lm_pred = pred.num_vertices() == gt.num_vertices() ? cfg.landmarks : std::vector<int>{};
    rep.id_sim = identity_similarity(emb, render_for_identity(aligned, nullptr, lm_pred, cfg.view),
                                     render_for_identity(gt, nullptr, lm_pred, cfg.view));
    return rep;
}

}  // namespace facegen
