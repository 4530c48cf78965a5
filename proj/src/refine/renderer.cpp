#include "facegen/refine/renderer.hpp"

#include "facegen/core/error.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>

namespace facegen {

std::vector<RenderView> default_views(int size) {
    std::vector<RenderView> v;
    for (double yaw : {-30.0, 0.0, 30.0}) {
        RenderView r;
        r.yaw = yaw;
        r.width = r.height = size;
        r.mm_per_pixel = 1.6 * 128.0 / size;
        v.push_back(r);
    }
    return v;
}

Eigen::Vector3d project(const Eigen::Vector3d& p, const RenderView& view) {
    const double a = view.yaw * std::numbers::pi / 180.0;
    const double c = std::cos(a), s = std::sin(a);
    const double x = c * p.x() + s * p.z();
    const double z = -s * p.x() + c * p.z();
    return {0.5 * view.width + x / view.mm_per_pixel, 0.5 * view.height - p.y() / view.mm_per_pixel, z};
}

namespace {

// Whether the edge a->b is a top or left edge of a triangle whose third
// vertex is c (screen coordinates, y down).
bool top_left(const Eigen::Vector2d& a, const Eigen::Vector2d& b, const Eigen::Vector2d& c) {
    if (a.y() == b.y()) return c.y() > a.y();
    const double x_at = a.x() + (c.y() - a.y()) * (b.x() - a.x()) / (b.y() - a.y());
    return x_at < c.x();
}

double edge(const Eigen::Vector2d& a, const Eigen::Vector2d& b, const Eigen::Vector2d& p) {
    return (b.x() - a.x()) * (p.y() - a.y()) - (b.y() - a.y()) * (p.x() - a.x());
}

}  // namespace

RenderResult render(const FaceMesh& mesh, const RgbImage* texture, const RenderView& view) {
    if (view.width < 16 || view.height < 16) throw ArgumentError("render views must be at least 16x16");
    if (!texture) texture = mesh.texture ? &*mesh.texture : nullptr;
    if (!texture || texture->empty()) throw ArgumentError("render needs a texture");
    if (mesh.uv.rows() != mesh.vertices.rows()) throw ArgumentError("render needs per-vertex uv");
    const RgbImage tex = texture->clamped();
    const int W = view.width, H = view.height, TW = tex.width, TH = tex.height;
    const std::size_t npx = static_cast<std::size_t>(W) * H;

    RenderResult out;
    out.image = RgbImage(W, H, view.background.x(), view.background.y(), view.background.z());
    out.triangle.assign(npx, -1);
    out.taps.assign(npx, {0, 0, 0, 0});
    out.weights.assign(npx, {0.0, 0.0, 0.0, 0.0});
    std::vector<double> depth(npx, -std::numeric_limits<double>::infinity());

    std::vector<Eigen::Vector3d> scr(mesh.vertices.rows());
    for (Eigen::Index i = 0; i < mesh.vertices.rows(); ++i) scr[i] = project(mesh.vertices.row(i).transpose(), view);

    for (Eigen::Index f = 0; f < mesh.faces.rows(); ++f) {
        const int i0 = mesh.faces(f, 0), i1 = mesh.faces(f, 1), i2 = mesh.faces(f, 2);
        Eigen::Vector2d p0 = scr[i0].head<2>(), p1 = scr[i1].head<2>(), p2 = scr[i2].head<2>();
        const double area = edge(p0, p1, p2);
        if (area == 0.0) continue;
        const double sgn = area > 0 ? 1.0 : -1.0;
        const bool tl0 = top_left(p1, p2, p0), tl1 = top_left(p2, p0, p1), tl2 = top_left(p0, p1, p2);
        const int x0 = std::max(0, static_cast<int>(std::floor(std::min({p0.x(), p1.x(), p2.x()}) - 0.5)));
        const int x1 = std::min(W - 1, static_cast<int>(std::ceil(std::max({p0.x(), p1.x(), p2.x()}) - 0.5)));
        const int y0 = std::max(0, static_cast<int>(std::floor(std::min({p0.y(), p1.y(), p2.y()}) - 0.5)));
        const int y1 = std::min(H - 1, static_cast<int>(std::ceil(std::max({p0.y(), p1.y(), p2.y()}) - 0.5)));
        for (int py = y0; py <= y1; ++py) {
            for (int px = x0; px <= x1; ++px) {
                const Eigen::Vector2d p(px + 0.5, py + 0.5);
                const double w0 = sgn * edge(p1, p2, p), w1 = sgn * edge(p2, p0, p), w2 = sgn * edge(p0, p1, p);
                if (w0 < 0 || w1 < 0 || w2 < 0) continue;
                if ((w0 == 0 && !tl0) || (w1 == 0 && !tl1) || (w2 == 0 && !tl2)) continue;
                const double sum = w0 + w1 + w2;
                const double b0 = w0 / sum, b1 = w1 / sum, b2 = w2 / sum;
                const double z = b0 * scr[i0].z() + b1 * scr[i1].z() + b2 * scr[i2].z();
                const std::size_t k = static_cast<std::size_t>(py) * W + px;
                if (!(z > depth[k])) continue;
                depth[k] = z;
                out.triangle[k] = static_cast<int>(f);

                const double u = b0 * mesh.uv(i0, 0) + b1 * mesh.uv(i1, 0) + b2 * mesh.uv(i2, 0);
                const double v = b0 * mesh.uv(i0, 1) + b1 * mesh.uv(i1, 1) + b2 * mesh.uv(i2, 1);
                const double cx = std::clamp(u * TW - 0.5, 0.0, TW - 1.0);
                const double cy = std::clamp((1.0 - v) * TH - 0.5, 0.0, TH - 1.0);
                const int tx = std::min(static_cast<int>(cx), TW - 2 < 0 ? 0 : TW - 2);
                const int ty = std::min(static_cast<int>(cy), TH - 2 < 0 ? 0 : TH - 2);
                const double fx = cx - tx, fy = cy - ty;
                out.taps[k] = {ty * TW + tx, ty * TW + tx + 1, (ty + 1) * TW + tx, (ty + 1) * TW + tx + 1};
                out.weights[k] = {(1 - fx) * (1 - fy), fx * (1 - fy), (1 - fx) * fy, fx * fy};
                for (int c = 0; c < 3; ++c) {
                    double col = 0.0;
                    for (int t = 0; t < 4; ++t) col += out.weights[k][t] * tex.data[3 * out.taps[k][t] + c];
                    out.image.data[3 * k + c] = col;
                }
            }
        }
    }
    return out;
}

std::vector<TextureLayout::Label> RenderResult::labels(const TextureLayout& layout) const {
    std::vector<TextureLayout::Label> out(triangle.size(), TextureLayout::Label::back);
    for (std::size_t k = 0; k < triangle.size(); ++k) {
        if (triangle[k] < 0) continue;
        const auto& w = weights[k];
        const int best = static_cast<int>(std::max_element(w.begin(), w.end()) - w.begin());
        out[k] = layout.label[taps[k][best]];
    }
    return out;
}

RgbImage RenderResult::texture_gradient(const RgbImage& image_grad, int tex_width, int tex_height) const {
    RgbImage g(tex_width, tex_height);
    for (std::size_t k = 0; k < triangle.size(); ++k) {
        if (triangle[k] < 0) continue;
        for (int t = 0; t < 4; ++t) {
            const double w = weights[k][t];
            if (w == 0.0) continue;
            for (int c = 0; c < 3; ++c) g.data[3 * taps[k][t] + c] += w * image_grad.data[3 * k + c];
        }
    }
    return g;
}

}  // namespace facegen
