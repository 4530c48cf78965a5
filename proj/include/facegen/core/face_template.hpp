#pragma once

#include "facegen/core/mesh.hpp"

#include <Eigen/Core>

#include <array>
#include <cstdint>
#include <vector>

namespace facegen {

// Labels for the region-weighted shape loss.
enum class Region : std::uint8_t { landmark, feature, face_other, back_head };
// Labels for the region-specific triplet loss.
enum class FeatureRegion : std::uint8_t { eyes, nose, mouth, other };

inline constexpr std::size_t kNumLandmarks = 68;

struct RegionMasks {
    std::vector<int> landmark_indices;  // 68, iBUG ordering
    std::array<int, 2> pupils{};        // {x < 0 eye, x > 0 eye}
    std::vector<Region> region_of_vertex;
    std::vector<FeatureRegion> feature_region_of_vertex;

    // Throws ValidationError if any labeling invariant fails for an n-vertex mesh.
    void validate(std::size_t n) const;

    std::vector<int> select(Region r) const;
    std::vector<int> select(FeatureRegion r) const;
    // Every vertex that is not back_head.
    std::vector<int> front_face() const;
};

struct TemplateConfig {
    int columns = 49;  // azimuth samples; odd keeps a vertex column on x = 0
    int rows = 40;     // elevation samples
};

// Canonical head template: a lattice over a half-ellipsoid head with nose,
// eye sockets, brow ridges, cheekbones, lips and chin carved in. Interpupillary
// midpoint sits at the origin.
class FaceTemplate {
   public:
    explicit FaceTemplate(TemplateConfig config = {});

    const FaceMesh& mesh() const { return mesh_; }
    const RegionMasks& masks() const { return masks_; }
    const TemplateConfig& config() const { return config_; }

    // Template surface at texture coordinate (u, v), canonical frame.
    Eigen::Vector3d surface_point(double u, double v) const;
    // 1 on the front of the face, falling to 0 at the sides; 0 on the back.
    double front_weight(double u) const;

    // Frontal design-frame coordinates of a canonical point. Feature layouts
    // (landmarks, texture regions) are specified in this frame.
    Eigen::Vector2d design_xy(const Eigen::Vector3d& canonical) const {
        return {canonical.x() + offset_.x(), canonical.y() + offset_.y()};
    }

    double azimuth(double u) const;    // radians
    double elevation(double v) const;  // radians

   private:
    Eigen::Vector3d design_point(double u, double v) const;

    TemplateConfig config_;
    std::vector<double> elevation_table_;
    std::vector<double> azimuth_table_;
    Eigen::Vector3d offset_ = Eigen::Vector3d::Zero();
    FaceMesh mesh_;
    RegionMasks masks_;
};

// Soft UV-space masks (row-major texels, row 0 = top = v near 1).
struct TextureLayout {
    enum class Label : std::uint8_t { skin, lips, eyes, eyelids, brows, beard, back };

    int width = 0;
    int height = 0;
    std::vector<double> lips, sclera, iris, eyelids, brows, beard_full, beard_chin, front;
    std::vector<Label> label;

    std::vector<int> texels(Label l) const;
};

TextureLayout make_texture_layout(const FaceTemplate& face, int width, int height);

}  // namespace facegen
