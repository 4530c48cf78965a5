#pragma once

#include "facegen/core/archive.hpp"
#include "facegen/core/mesh.hpp"

#include <Eigen/Core>

#include <vector>

namespace facegen {

// PCA model x = mean + B * diag(sigma) * c over flattened samples.
// sigma_k = S_k / sqrt(m - 1), so coefficients have unit variance over the
// training set. Columns of B are orthonormal; each column's largest-magnitude
// entry is positive.
class LinearModel {
   public:
    LinearModel() = default;

    // samples: D x m, one sample per column. Throws RankError when
    // m < components + 1.
    static LinearModel build(const Eigen::MatrixXd& samples, int components);

    int dim() const { return static_cast<int>(mean_.size()); }
    int components() const { return static_cast<int>(sigma_.size()); }
    const Eigen::VectorXd& mean() const { return mean_; }
    const Eigen::MatrixXd& basis() const { return basis_; }
    const Eigen::VectorXd& sigma() const { return sigma_; }
    // Fraction of the training variance captured by the retained components.
    double retained_variance() const;
    const Eigen::VectorXd& full_spectrum() const { return spectrum_; }

    // Throws ArgumentError on a wrong coefficient count.
    Eigen::VectorXd synthesize(const Eigen::VectorXd& coeffs) const;
    // diag(sigma)^-1 B^T (x - mean); components with sigma < 1e-9 are 0.
    Eigen::VectorXd fit(const Eigen::VectorXd& x) const;
    // d x / d c for an upstream gradient d L / d x: sigma .* (B^T g).
    Eigen::VectorXd pullback(const Eigen::VectorXd& grad_x) const;

    void write(Archive& a) const;
    static LinearModel read(const Archive& a);

   private:
    Eigen::VectorXd mean_;
    Eigen::MatrixXd basis_;
    Eigen::VectorXd sigma_;
    Eigen::VectorXd spectrum_;  // all sigma values of the training data
};

inline constexpr double kSigmaFloor = 1e-9;

class ShapeModel {
   public:
    ShapeModel() = default;
    // All meshes must share the topology of meshes[0]; throws
    // ValidationError otherwise and RankError when fewer than m + 1.
    static ShapeModel build(const std::vector<FaceMesh>& meshes, int m);

    const LinearModel& linear() const { return model_; }
    int components() const { return model_.components(); }
    const FaceMesh& topology() const { return topology_; }

    FaceMesh mean_mesh() const { return topology_.with_vertices(model_.mean()); }
    FaceMesh synthesize(const Eigen::VectorXd& s) const;
    Eigen::VectorXd fit(const FaceMesh& mesh) const;

    Archive to_archive() const;
    static ShapeModel from_archive(const Archive& a);

   private:
    LinearModel model_;
    FaceMesh topology_;  // faces + uv; vertices = mean
};

class TextureModel {
   public:
    TextureModel() = default;
    static TextureModel build(const std::vector<RgbImage>& textures, int m);

    const LinearModel& linear() const { return model_; }
    int components() const { return model_.components(); }
    int width() const { return width_; }
    int height() const { return height_; }

    // Unclamped model-space image.
    RgbImage synthesize(const Eigen::VectorXd& t) const;
    Eigen::VectorXd fit(const RgbImage& image) const;

    Archive to_archive() const;
    static TextureModel from_archive(const Archive& a);

   private:
    LinearModel model_;
    int width_ = 0, height_ = 0;
};

}  // namespace facegen
