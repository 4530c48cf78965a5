#include "facegen/morphable/linear_model.hpp"

#include "facegen/core/error.hpp"

#include <Eigen/SVD>

#include <cmath>

namespace facegen {

LinearModel LinearModel::build(const Eigen::MatrixXd& samples, int components) {
    const Eigen::Index m = samples.cols();
    if (components < 1) throw ArgumentError("component count must be positive");
    if (m < components + 1)
        throw RankError("need at least " + std::to_string(components + 1) + " samples for " +
                        std::to_string(components) + " components, got " + std::to_string(m));
    if (components > samples.rows()) throw RankError("more components than sample dimensions");

    LinearModel model;
    model.mean_ = samples.rowwise().mean();
    Eigen::MatrixXd centered = samples.colwise() - model.mean_;
    Eigen::BDCSVD<Eigen::MatrixXd> svd(centered, Eigen::ComputeThinU);
    const double norm = std::sqrt(static_cast<double>(m - 1));
    model.spectrum_ = svd.singularValues() / norm;
    model.basis_ = svd.matrixU().leftCols(components);
    model.sigma_ = model.spectrum_.head(components);
    for (int k = 0; k < components; ++k) {
        auto col = model.basis_.col(k);
        Eigen::Index arg = 0;
        for (Eigen::Index i = 1; i < col.size(); ++i)
            if (std::abs(col[i]) > std::abs(col[arg])) arg = i;
        if (col[arg] < 0.0) col = -col;
    }
    return model;
}

double LinearModel::retained_variance() const {
    const double total = spectrum_.squaredNorm();
    return total > 0.0 ? sigma_.squaredNorm() / total : 1.0;
}

Eigen::VectorXd LinearModel::synthesize(const Eigen::VectorXd& coeffs) const {
    if (coeffs.size() != sigma_.size())
        throw ArgumentError("expected " + std::to_string(sigma_.size()) + " coefficients, got " +
                            std::to_string(coeffs.size()));
    return mean_ + basis_ * sigma_.cwiseProduct(coeffs);
}

Eigen::VectorXd LinearModel::fit(const Eigen::VectorXd& x) const {
    if (x.size() != mean_.size())
        throw ValidationError("sample has " + std::to_string(x.size()) + " values, model expects " +
                              std::to_string(mean_.size()));
    Eigen::VectorXd proj = basis_.transpose() * (x - mean_);
    for (Eigen::Index k = 0; k < proj.size(); ++k) proj[k] = sigma_[k] < kSigmaFloor ? 0.0 : proj[k] / sigma_[k];
    return proj;
}

Eigen::VectorXd LinearModel::pullback(const Eigen::VectorXd& grad_x) const {
    return sigma_.cwiseProduct(basis_.transpose() * grad_x);
}

void LinearModel::write(Archive& a) const {
    a.put("mean", mean_);
    a.put("basis", basis_);
    a.put("sigma", sigma_);
    a.put("spectrum", spectrum_);
    a.meta()["components"] = components();
}

LinearModel LinearModel::read(const Archive& a) {
    LinearModel m;
    m.mean_ = a.vector("mean");
    m.basis_ = a.matrix("basis");
    m.sigma_ = a.vector("sigma");
    m.spectrum_ = a.has("spectrum") ? a.vector("spectrum") : m.sigma_;
    if (m.basis_.rows() != m.mean_.size() || m.basis_.cols() != m.sigma_.size())
        throw ValidationError("model archive arrays have inconsistent shapes");
    return m;
}

ShapeModel ShapeModel::build(const std::vector<FaceMesh>& meshes, int m) {
    if (meshes.empty()) throw RankError("no meshes to build a shape model from");
    const auto& first = meshes.front();
    Eigen::MatrixXd data(first.vertices.size(), static_cast<Eigen::Index>(meshes.size()));
    for (std::size_t i = 0; i < meshes.size(); ++i) {
        if (meshes[i].num_vertices() != first.num_vertices() || meshes[i].faces != first.faces)
            throw ValidationError("mesh " + std::to_string(i) + " does not share the corpus topology");
        data.col(static_cast<Eigen::Index>(i)) = meshes[i].flat();
    }
    ShapeModel sm;
    sm.model_ = LinearModel::build(data, m);
    sm.topology_.faces = first.faces;
    sm.topology_.uv = first.uv;
    sm.topology_.vertices = first.vertices;
    sm.topology_ = sm.topology_.with_vertices(sm.model_.mean());
    return sm;
}

FaceMesh ShapeModel::synthesize(const Eigen::VectorXd& s) const { return topology_.with_vertices(model_.synthesize(s)); }

Eigen::VectorXd ShapeModel::fit(const FaceMesh& mesh) const {
    if (mesh.num_vertices() != topology_.num_vertices())
        throw ValidationError("mesh topology does not match the shape model");
    return model_.fit(mesh.flat());
}

Archive ShapeModel::to_archive() const {
    Archive a("shape_model");
    model_.write(a);
    a.put("faces", Eigen::MatrixXd(topology_.faces.cast<double>()));
    a.put("uv", Eigen::MatrixXd(topology_.uv));
    return a;
}

ShapeModel ShapeModel::from_archive(const Archive& a) {
    ShapeModel sm;
    sm.model_ = LinearModel::read(a);
    const Eigen::MatrixXd faces = a.matrix("faces");
    const Eigen::MatrixXd uv = a.matrix("uv");
    sm.topology_.faces = faces.cast<int>();
    sm.topology_.uv = uv;
    sm.topology_.vertices.resize(sm.model_.dim() / 3, 3);
    sm.topology_ = sm.topology_.with_vertices(sm.model_.mean());
    sm.topology_.validate();
    return sm;
}

TextureModel TextureModel::build(const std::vector<RgbImage>& textures, int m) {
    if (textures.empty()) throw RankError("no textures to build a texture model from");
    const auto& first = textures.front();
    Eigen::MatrixXd data(static_cast<Eigen::Index>(first.data.size()), static_cast<Eigen::Index>(textures.size()));
    for (std::size_t i = 0; i < textures.size(); ++i) {
        if (textures[i].width != first.width || textures[i].height != first.height)
            throw ValidationError("texture " + std::to_string(i) + " has a different resolution");
        data.col(static_cast<Eigen::Index>(i)) = textures[i].flat();
    }
    TextureModel tm;
    tm.model_ = LinearModel::build(data, m);
    tm.width_ = first.width;
    tm.height_ = first.height;
    return tm;
}

RgbImage TextureModel::synthesize(const Eigen::VectorXd& t) const {
    RgbImage img(width_, height_);
    img.flat() = model_.synthesize(t);
    return img;
}

Eigen::VectorXd TextureModel::fit(const RgbImage& image) const {
    if (image.width != width_ || image.height != height_)
        throw ValidationError("texture resolution does not match the texture model");
    return model_.fit(image.flat());
}

Archive TextureModel::to_archive() const {
    Archive a("texture_model");
    model_.write(a);
    a.meta()["width"] = width_;
    a.meta()["height"] = height_;
    return a;
}

TextureModel TextureModel::from_archive(const Archive& a) {
    TextureModel tm;
    tm.model_ = LinearModel::read(a);
    tm.width_ = a.meta().at("width").get<int>();
    tm.height_ = a.meta().at("height").get<int>();
    if (static_cast<long>(tm.width_) * tm.height_ * 3 != tm.model_.dim())
        throw ValidationError("texture model size does not match its declared resolution");
    return tm;
}

}  // namespace facegen
