#include "facegen/core/image_io.hpp"
#include "facegen/core/error.hpp"
#include "facegen/core/mesh.hpp"

#include <png.h>

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <memory>

namespace facegen {

RgbImage::RgbImage(int w, int h, double r, double g, double b) : width(w), height(h) {
    data.resize(static_cast<std::size_t>(w) * h * 3);
    for (std::size_t i = 0; i < data.size(); i += 3) {
        data[i] = r;
        data[i + 1] = g;
        data[i + 2] = b;
    }
}

RgbImage RgbImage::clamped() const {
    RgbImage out = *this;
    for (double& v : out.data) v = std::clamp(v, 0.0, 1.0);
    return out;
}

void FaceMesh::validate() const {
    const auto n = static_cast<int>(vertices.rows());
    for (Eigen::Index f = 0; f < faces.rows(); ++f)
        for (int k = 0; k < 3; ++k)
            if (faces(f, k) < 0 || faces(f, k) >= n)
                throw ValidationError("face " + std::to_string(f) + " references vertex " +
                                      std::to_string(faces(f, k)) + " of " + std::to_string(n));
    if (uv.rows() != 0 && uv.rows() != n)
        throw ValidationError("uv count " + std::to_string(uv.rows()) + " does not match vertex count " +
                              std::to_string(n));
}

FaceMesh FaceMesh::with_vertices(const Eigen::Ref<const Eigen::VectorXd>& flat) const {
    if (flat.size() != vertices.size()) throw ArgumentError("vertex vector has the wrong length");
    FaceMesh out;
    out.vertices = Eigen::Map<const Vertices>(flat.data(), vertices.rows(), 3);
    out.faces = faces;
    out.uv = uv;
    return out;
}

namespace {

struct FileCloser {
    void operator()(std::FILE* f) const {
        if (f) std::fclose(f);
    }
};

}  // namespace

void write_png(const RgbImage& image, const std::filesystem::path& path) {
    std::unique_ptr<std::FILE, FileCloser> fp(std::fopen(path.c_str(), "wb"));
    if (!fp) throw IoError("cannot open " + path.string() + " for writing");
    png_structp png = png_create_write_struct(PNG_LIBPNG_VER_STRING, nullptr, nullptr, nullptr);
    png_infop info = png ? png_create_info_struct(png) : nullptr;
    if (!png || !info) {
        png_destroy_write_struct(&png, &info);
        throw IoError("libpng initialisation failed");
    }
    std::vector<unsigned char> row(static_cast<std::size_t>(image.width) * 3);
    if (setjmp(png_jmpbuf(png))) {
        png_destroy_write_struct(&png, &info);
        throw IoError("failed writing " + path.string());
    }
    png_init_io(png, fp.get());
    png_set_IHDR(png, info, image.width, image.height, 8, PNG_COLOR_TYPE_RGB, PNG_INTERLACE_NONE,
                 PNG_COMPRESSION_TYPE_DEFAULT, PNG_FILTER_TYPE_DEFAULT);
    png_set_compression_level(png, 6);
    png_write_info(png, info);
    for (int y = 0; y < image.height; ++y) {
        for (int x = 0; x < image.width * 3; ++x) {
            const double v = std::clamp(image.data[static_cast<std::size_t>(y) * image.width * 3 + x], 0.0, 1.0);
            row[x] = static_cast<unsigned char>(std::lround(v * 255.0));
        }
        png_write_row(png, row.data());
    }
    png_write_end(png, nullptr);
    png_destroy_write_struct(&png, &info);
}

RgbImage read_png(const std::filesystem::path& path) {
    std::unique_ptr<std::FILE, FileCloser> fp(std::fopen(path.c_str(), "rb"));
    if (!fp) throw IoError("cannot open " + path.string());
    png_structp png = png_create_read_struct(PNG_LIBPNG_VER_STRING, nullptr, nullptr, nullptr);
    png_infop info = png ? png_create_info_struct(png) : nullptr;
    if (!png || !info) {
        png_destroy_read_struct(&png, &info, nullptr);
        throw IoError("libpng initialisation failed");
    }
    RgbImage image;
    std::vector<unsigned char> row;
    if (setjmp(png_jmpbuf(png))) {
        png_destroy_read_struct(&png, &info, nullptr);
        throw ParseError("not a readable PNG: " + path.string(), 1);
    }
    png_init_io(png, fp.get());
    png_read_info(png, info);
    png_set_expand(png);
    png_set_strip_16(png);
    png_set_strip_alpha(png);
    png_set_gray_to_rgb(png);
    png_read_update_info(png, info);
    image.width = static_cast<int>(png_get_image_width(png, info));
    image.height = static_cast<int>(png_get_image_height(png, info));
    image.data.resize(static_cast<std::size_t>(image.width) * image.height * 3);
    row.resize(png_get_rowbytes(png, info));
    for (int y = 0; y < image.height; ++y) {
        png_read_row(png, row.data(), nullptr);
        for (int x = 0; x < image.width * 3; ++x)
            image.data[static_cast<std::size_t>(y) * image.width * 3 + x] = row[x] / 255.0;
    }
    png_destroy_read_struct(&png, &info, nullptr);
    return image;
}

}  // namespace facegen
