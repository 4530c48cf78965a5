#pragma once

#include "facegen/core/face_template.hpp"
#include "facegen/core/mesh.hpp"

#include <Eigen/Core>

#include <array>
#include <vector>

namespace facegen {

struct RenderView {
    double yaw = 0.0;  // degrees, rotation about +y
    int width = 128;
    int height = 128;
    double mm_per_pixel = 1.6;
    Eigen::Vector3d background = Eigen::Vector3d::Zero();
};

// Standard views used by refinement: yaw -30, 0 and +30 degrees.
std::vector<RenderView> default_views(int size = 128);

struct RenderResult {
    RgbImage image;
    std::vector<int> triangle;  // per pixel, -1 for background
    // Bilinear texture taps per pixel: pixel = sum_k weight[k] * texel[tap[k]].
    std::vector<std::array<int, 4>> taps;
    std::vector<std::array<double, 4>> weights;

    bool covered(std::size_t pixel) const { return triangle[pixel] >= 0; }
    // Texture-layout label of each pixel (the largest tap); background pixels
    // are labelled Label::back.
    std::vector<TextureLayout::Label> labels(const TextureLayout& layout) const;
    // d loss / d texel values (texture-shaped, unclamped layout) for an
    // upstream image gradient.
    RgbImage texture_gradient(const RgbImage& image_grad, int tex_width, int tex_height) const;
};

// Screen position (x right, y down, pixels) and depth of a point.
Eigen::Vector3d project(const Eigen::Vector3d& p, const RenderView& view);

// Orthographic z-buffer rasterization (larger depth is nearer; a tie keeps the
// lower triangle index; top-left fill rule at pixel centres). Colors are
// bilinear samples of the texture clamped to [0, 1] at the interpolated uv.
// The mesh texture is used when `texture` is null.
RenderResult render(const FaceMesh& mesh, const RgbImage* texture, const RenderView& view);

}  // namespace facegen
