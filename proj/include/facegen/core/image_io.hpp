#pragma once

#include "facegen/core/mesh.hpp"

#include <filesystem>

namespace facegen {

// Lossless 8-bit RGB PNG. Values are clamped to [0, 1] and rounded.
void write_png(const RgbImage& image, const std::filesystem::path& path);
RgbImage read_png(const std::filesystem::path& path);

}  // namespace facegen
