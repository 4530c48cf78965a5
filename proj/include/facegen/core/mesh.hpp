#pragma once

#include <Eigen/Core>

#include <cstddef>
#include <optional>
#include <vector>

namespace facegen {

using Vertices = Eigen::Matrix<double, Eigen::Dynamic, 3, Eigen::RowMajor>;
using Faces = Eigen::Matrix<int, Eigen::Dynamic, 3, Eigen::RowMajor>;
using UvCoords = Eigen::Matrix<double, Eigen::Dynamic, 2, Eigen::RowMajor>;

// 8-bit-per-channel images are stored as doubles in [0, 1] (model space may
// leave that range; clamping happens at render and write time). Row 0 is the
// top row; channels are interleaved RGB.
struct RgbImage {
    int width = 0;
    int height = 0;
    std::vector<double> data;

    RgbImage() = default;
    RgbImage(int w, int h, double r = 0.0, double g = 0.0, double b = 0.0);

    bool empty() const { return data.empty(); }
    std::size_t pixel_count() const { return static_cast<std::size_t>(width) * height; }
    double& at(int x, int y, int c) { return data[(static_cast<std::size_t>(y) * width + x) * 3 + c]; }
    double at(int x, int y, int c) const {
        return data[(static_cast<std::size_t>(y) * width + x) * 3 + c];
    }

    Eigen::Map<Eigen::VectorXd> flat() { return {data.data(), static_cast<Eigen::Index>(data.size())}; }
    Eigen::Map<const Eigen::VectorXd> flat() const {
        return {data.data(), static_cast<Eigen::Index>(data.size())};
    }

    RgbImage clamped() const;
};

// Rec. 709 luma of an RGB triple.
inline double luminance(double r, double g, double b) { return 0.2126 * r + 0.7152 * g + 0.0722 * b; }

// Triangle mesh in millimetres, canonical face frame: +x right, +y up, +z
// toward the viewer. uv is per-vertex (the corpus shares one topology).
struct FaceMesh {
    Vertices vertices;
    Faces faces;
    UvCoords uv;
    std::optional<RgbImage> texture;

    std::size_t num_vertices() const { return static_cast<std::size_t>(vertices.rows()); }
    std::size_t num_faces() const { return static_cast<std::size_t>(faces.rows()); }

    // Throws ValidationError when a face index is out of range or the uv
    // array does not match the vertex count.
    void validate() const;

    Eigen::Map<const Eigen::VectorXd> flat() const {
        return {vertices.data(), static_cast<Eigen::Index>(vertices.size())};
    }
    FaceMesh with_vertices(const Eigen::Ref<const Eigen::VectorXd>& flat) const;
};

}  // namespace facegen
