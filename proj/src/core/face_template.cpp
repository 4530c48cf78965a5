#include "facegen/core/face_template.hpp"

#include "facegen/core/error.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <limits>
#include <numbers>
#include <set>

namespace facegen {

namespace {

constexpr double kDeg = std::numbers::pi / 180.0;

// Ellipsoid half-axes (mm).
constexpr double kHalfWidth = 78.0;
constexpr double kHalfHeight = 105.0;
constexpr double kHalfDepth = 95.0;

constexpr double kAzimuthLimit = 135.0 * kDeg;
constexpr double kElevationLow = -60.0 * kDeg;
constexpr double kElevationHigh = 85.0 * kDeg;

struct Bump {
    double height, cx, cy, sx, sy;
};

// Relief carved into the front of the ellipsoid, design frame (mm).
constexpr Bump kRelief[] = {
    {18.0, 0.0, -18.0, 8.0, 16.0},    // nose ridge
    {6.0, 0.0, -30.0, 6.0, 5.0},      // nose tip
    {-7.0, -32.0, 0.0, 11.0, 8.0},    // eye sockets
    {-7.0, 32.0, 0.0, 11.0, 8.0},
    {4.0, -30.0, 14.0, 14.0, 5.0},    // brow ridges
    {4.0, 30.0, 14.0, 14.0, 5.0},
    {3.0, -45.0, -18.0, 12.0, 10.0},  // cheekbones
    {3.0, 45.0, -18.0, 12.0, 10.0},
    {4.0, 0.0, -55.0, 16.0, 6.0},     // lips
    {5.0, 0.0, -80.0, 12.0, 9.0},     // chin
};

// Design-frame positions of the 68 landmarks (iBUG ordering).
std::vector<Eigen::Vector2d> landmark_layout() {
    std::vector<Eigen::Vector2d> p;
    for (int k = 0; k < 17; ++k) {
        const double a = (180.0 + 180.0 * k / 16.0) * kDeg;
        p.emplace_back(66.0 * std::cos(a), -10.0 + 75.0 * std::sin(a));
    }
    for (double x : {-50.0, -42.0, -33.0, -24.0, -15.0}) p.emplace_back(x, 14.0 + 4.0 * std::cos((x + 32.5) / 20.0));
    for (double x : {15.0, 24.0, 33.0, 42.0, 50.0}) p.emplace_back(x, 14.0 + 4.0 * std::cos((x - 32.5) / 20.0));
    for (double y : {8.0, -4.0, -16.0, -28.0}) p.emplace_back(0.0, y);
    for (double x : {-12.0, -6.0, 0.0, 6.0, 12.0}) p.emplace_back(x, -36.0);
    const double eye[6][2] = {{-45, 0}, {-36, 5}, {-27, 5}, {-19, 0}, {-27, -4}, {-36, -4}};
    for (auto& e : eye) p.emplace_back(e[0], e[1]);
    const double eye_l[6][2] = {{19, 0}, {27, 5}, {36, 5}, {45, 0}, {36, -4}, {27, -4}};
    for (auto& e : eye_l) p.emplace_back(e[0], e[1]);
    const double mouth[20][2] = {{-24, -55}, {-15, -50}, {-6, -48}, {0, -48},  {6, -48},
                                 {15, -50},  {24, -55},  {15, -61}, {6, -63},  {0, -63},
                                 {-6, -63},  {-15, -61}, {-18, -55}, {-6, -53}, {0, -53},
                                 {6, -53},   {18, -55},  {6, -57},  {0, -57},  {-6, -57}};
    for (auto& m : mouth) p.emplace_back(m[0], m[1]);
    return p;
}

// Inverse CDF of a density over [lo, hi], tabulated on 4097 points.
std::vector<double> inverse_cdf_table(const std::function<double(double)>& density, double lo,
                                      double hi) {
    constexpr int kFine = 8192;
    std::vector<double> x(kFine + 1), cdf(kFine + 1, 0.0);
    for (int i = 0; i <= kFine; ++i) x[i] = lo + (hi - lo) * i / kFine;
    for (int i = 1; i <= kFine; ++i) cdf[i] = cdf[i - 1] + 0.5 * (density(x[i - 1]) + density(x[i]));
    for (double& c : cdf) c /= cdf.back();
    constexpr int kTable = 4096;
    std::vector<double> table(kTable + 1);
    for (int k = 0; k <= kTable; ++k) {
        const double t = static_cast<double>(k) / kTable;
        auto it = std::lower_bound(cdf.begin(), cdf.end(), t);
        const auto i = std::clamp<std::ptrdiff_t>(it - cdf.begin(), 1, kFine);
        const double w = (t - cdf[i - 1]) / std::max(cdf[i] - cdf[i - 1], 1e-300);
        table[k] = x[i - 1] + std::clamp(w, 0.0, 1.0) * (x[i] - x[i - 1]);
    }
    table.front() = lo;
    table.back() = hi;
    return table;
}

double lookup(const std::vector<double>& table, double t) {
    const double s = std::clamp(t, 0.0, 1.0) * (table.size() - 1);
    const auto i = std::min<std::size_t>(static_cast<std::size_t>(s), table.size() - 2);
    const double w = s - i;
    return table[i] * (1.0 - w) + table[i + 1] * w;
}

double quantize_uv(double u) { return std::round(u * 1e6) / 1e6; }

bool inside_ellipse(const Eigen::Vector2d& p, double cx, double cy, double rx, double ry) {
    const double dx = (p.x() - cx) / rx, dy = (p.y() - cy) / ry;
    return dx * dx + dy * dy <= 1.0;
}

double smoothstep(double e0, double e1, double x) {
    const double t = std::clamp((x - e0) / (e1 - e0), 0.0, 1.0);
    return t * t * (3.0 - 2.0 * t);
}

// 1 inside the ellipse, 0 outside, smooth band of relative width 0.2.
double soft_ellipse(const Eigen::Vector2d& p, double cx, double cy, double rx, double ry) {
    const double dx = (p.x() - cx) / rx, dy = (p.y() - cy) / ry;
    return 1.0 - smoothstep(0.85, 1.15, std::sqrt(dx * dx + dy * dy));
}

}  // namespace

void RegionMasks::validate(std::size_t n) const {
    if (landmark_indices.size() != kNumLandmarks)
        throw ValidationError("expected 68 landmarks, got " + std::to_string(landmark_indices.size()));
    std::set<int> unique(landmark_indices.begin(), landmark_indices.end());
    if (unique.size() != kNumLandmarks) throw ValidationError("landmark indices are not distinct");
    for (int i : landmark_indices)
        if (i < 0 || static_cast<std::size_t>(i) >= n) throw ValidationError("landmark index out of range");
    if (region_of_vertex.size() != n || feature_region_of_vertex.size() != n)
        throw ValidationError("region labeling does not cover every vertex");
    for (int i : landmark_indices)
        if (region_of_vertex[i] != Region::landmark) throw ValidationError("landmark vertex mislabeled");
    for (int p : pupils)
        if (p < 0 || static_cast<std::size_t>(p) >= n) throw ValidationError("pupil index out of range");
}

std::vector<int> RegionMasks::select(Region r) const {
    std::vector<int> out;
    for (std::size_t i = 0; i < region_of_vertex.size(); ++i)
        if (region_of_vertex[i] == r) out.push_back(static_cast<int>(i));
    return out;
}

std::vector<int> RegionMasks::select(FeatureRegion r) const {
    std::vector<int> out;
    for (std::size_t i = 0; i < feature_region_of_vertex.size(); ++i)
        if (feature_region_of_vertex[i] == r) out.push_back(static_cast<int>(i));
    return out;
}

std::vector<int> RegionMasks::front_face() const {
    std::vector<int> out;
    for (std::size_t i = 0; i < region_of_vertex.size(); ++i)
        if (region_of_vertex[i] != Region::back_head) out.push_back(static_cast<int>(i));
    return out;
}

FaceTemplate::FaceTemplate(TemplateConfig config) : config_(config) {
    if (config_.columns < 5 || config_.rows < 5 || config_.columns % 2 == 0)
        throw ArgumentError("template needs an odd column count >= 5 and >= 5 rows");

    // Denser sampling across the face: eyes through chin, and the frontal arc.
    elevation_table_ = inverse_cdf_table(
        [](double t) {
            const double d = (t / kDeg + 20.0) / 30.0;
            return 1.0 + 2.0 * std::exp(-d * d);
        },
        kElevationLow, kElevationHigh);
    azimuth_table_ = inverse_cdf_table(
        [](double p) {
            const double d = p / kDeg / 40.0;
            return 1.0 + 2.5 * std::exp(-d * d);
        },
        -kAzimuthLimit, kAzimuthLimit);

    const int cols = config_.columns, rows = config_.rows;
    const int n = cols * rows;
    Vertices design(n, 3);
    mesh_.uv.resize(n, 2);
    std::vector<double> azimuths(n), elevations(n);
    for (int i = 0; i < rows; ++i) {
        for (int j = 0; j < cols; ++j) {
            const int k = i * cols + j;
            const double u = quantize_uv(static_cast<double>(j) / (cols - 1));
            const double v = quantize_uv(static_cast<double>(i) / (rows - 1));
            mesh_.uv.row(k) << u, v;
            design.row(k) = design_point(u, v).transpose();
            azimuths[k] = azimuth(u);
            elevations[k] = elevation(v);
        }
    }

    mesh_.faces.resize(2 * (rows - 1) * (cols - 1), 3);
    int f = 0;
    const int centre = cols / 2;
    for (int i = 0; i + 1 < rows; ++i) {
        for (int j = 0; j + 1 < cols; ++j) {
            const int a = i * cols + j, b = a + 1, c = a + cols, d = c + 1;
            // Diagonals mirror about the centre column so the mesh is symmetric.
            if (j >= centre) {
                mesh_.faces.row(f++) << a, b, d;
                mesh_.faces.row(f++) << a, d, c;
            } else {
                mesh_.faces.row(f++) << a, b, c;
                mesh_.faces.row(f++) << b, d, c;
            }
        }
    }

    auto is_face = [&](int k) {
        return std::abs(azimuths[k]) <= 80.0 * kDeg && elevations[k] <= 55.0 * kDeg &&
               elevations[k] >= -58.0 * kDeg;
    };
    auto nearest = [&](const Eigen::Vector2d& target, const std::set<int>& used) {
        int best = -1;
        double best_d = std::numeric_limits<double>::infinity();
        for (int k = 0; k < n; ++k) {
            if (!is_face(k) || used.count(k)) continue;
            const double d = (design.row(k).head<2>().transpose() - target).squaredNorm();
            if (d < best_d) {
                best_d = d;
                best = k;
            }
        }
        return best;
    };

    masks_.pupils = {nearest({-32.0, 0.0}, {}), nearest({32.0, 0.0}, {})};
    const Eigen::RowVector3d mid =
        0.5 * (design.row(masks_.pupils[0]) + design.row(masks_.pupils[1]));
    offset_ = mid.transpose();
    offset_.x() = 0.0;
    mesh_.vertices = design.rowwise() - Eigen::RowVector3d(0.0, offset_.y(), offset_.z());

    std::set<int> used;
    for (const auto& p : landmark_layout()) {
        const int k = nearest(p, used);
        used.insert(k);
        masks_.landmark_indices.push_back(k);
    }

    masks_.region_of_vertex.assign(n, Region::back_head);
    masks_.feature_region_of_vertex.assign(n, FeatureRegion::other);
    for (int k = 0; k < n; ++k) {
        if (!is_face(k)) continue;
        const Eigen::Vector2d p = design.row(k).head<2>().transpose();
        FeatureRegion fr = FeatureRegion::other;
        if (inside_ellipse(p, -32.0, 5.0, 20.0, 16.0) || inside_ellipse(p, 32.0, 5.0, 20.0, 16.0))
            fr = FeatureRegion::eyes;
        else if (inside_ellipse(p, 0.0, -17.0, 15.0, 26.0))
            fr = FeatureRegion::nose;
        else if (inside_ellipse(p, 0.0, -56.0, 30.0, 14.0))
            fr = FeatureRegion::mouth;
        masks_.feature_region_of_vertex[k] = fr;
        masks_.region_of_vertex[k] = fr == FeatureRegion::other ? Region::face_other : Region::feature;
    }
    for (int k : masks_.landmark_indices) masks_.region_of_vertex[k] = Region::landmark;
    masks_.validate(n);
    mesh_.validate();
}

double FaceTemplate::azimuth(double u) const {
    // Mirror so columns j and cols-1-j are exact reflections.
    if (u < 0.5) return -lookup(azimuth_table_, 1.0 - u);
    return lookup(azimuth_table_, u);
}

double FaceTemplate::elevation(double v) const { return lookup(elevation_table_, v); }

double FaceTemplate::front_weight(double u) const {
    const double c = std::cos(azimuth(u));
    return c > 0.0 ? c * c : 0.0;
}

Eigen::Vector3d FaceTemplate::design_point(double u, double v) const {
    const double phi = azimuth(u), theta = elevation(v);
    const double below = std::clamp((-theta / kDeg - 10.0) / 50.0, 0.0, 1.0);
    const double taper = 1.0 - 0.22 * below * below;
    const double x = kHalfWidth * std::cos(theta) * std::sin(phi) * taper;
    const double y = kHalfHeight * std::sin(theta);
    double z = kHalfDepth * std::cos(theta) * std::cos(phi);
    const double w = front_weight(u);
    if (w > 0.0) {
        double relief = 0.0;
        for (const auto& b : kRelief) {
            const double dx = (x - b.cx) / b.sx, dy = (y - b.cy) / b.sy;
            relief += b.height * std::exp(-0.5 * (dx * dx + dy * dy));
        }
        z += w * relief;
    }
    return {x, y, z};
}

Eigen::Vector3d FaceTemplate::surface_point(double u, double v) const {
    return design_point(u, v) - Eigen::Vector3d(0.0, offset_.y(), offset_.z());
}

std::vector<int> TextureLayout::texels(Label l) const {
    std::vector<int> out;
    for (std::size_t i = 0; i < label.size(); ++i)
        if (label[i] == l) out.push_back(static_cast<int>(i));
    return out;
}

TextureLayout make_texture_layout(const FaceTemplate& face, int width, int height) {
    if (width < 4 || height < 4) throw ArgumentError("texture must be at least 4x4");
    TextureLayout t;
    t.width = width;
    t.height = height;
    const std::size_t n = static_cast<std::size_t>(width) * height;
    for (auto* m : {&t.lips, &t.sclera, &t.iris, &t.eyelids, &t.brows, &t.beard_full, &t.beard_chin, &t.front})
        m->assign(n, 0.0);
    t.label.assign(n, TextureLayout::Label::back);
    for (int py = 0; py < height; ++py) {
        for (int px = 0; px < width; ++px) {
            const std::size_t k = static_cast<std::size_t>(py) * width + px;
            const double u = (px + 0.5) / width;
            const double v = 1.0 - (py + 0.5) / height;
            const double w = face.front_weight(u);
            const double el = face.elevation(v) / kDeg;
            t.front[k] = w > 0.0 && el <= 55.0 ? smoothstep(0.0, 0.2, w) : 0.0;
            if (t.front[k] <= 0.0) continue;
            const Eigen::Vector2d p = face.design_xy(face.surface_point(u, v));
            const double f = t.front[k];
            t.lips[k] = f * soft_ellipse(p, 0.0, -55.5, 22.0, 8.5);
            const double eye = std::max(soft_ellipse(p, -32.0, 0.0, 11.0, 4.5), soft_ellipse(p, 32.0, 0.0, 11.0, 4.5));
            t.sclera[k] = f * eye;
            t.iris[k] = f * std::max(soft_ellipse(p, -32.0, 0.0, 4.0, 4.0), soft_ellipse(p, 32.0, 0.0, 4.0, 4.0));
            const double lid = std::max(soft_ellipse(p, -32.0, 5.0, 15.0, 7.0), soft_ellipse(p, 32.0, 5.0, 15.0, 7.0));
            t.eyelids[k] = f * lid * (1.0 - eye);
            t.brows[k] = f * std::max(soft_ellipse(p, -31.0, 15.0, 16.0, 3.5), soft_ellipse(p, 31.0, 15.0, 16.0, 3.5));
            const double lower = (1.0 - smoothstep(-44.0, -34.0, p.y())) * (1.0 - smoothstep(50.0, 62.0, std::abs(p.x())));
            const double moustache = soft_ellipse(p, 0.0, -45.5, 20.0, 3.5);
            t.beard_full[k] = f * std::max(lower, moustache) * (1.0 - t.lips[k]);
            t.beard_chin[k] =
                f * std::max(soft_ellipse(p, 0.0, -76.0, 15.0, 13.0), moustache) * (1.0 - t.lips[k]);

            using L = TextureLayout::Label;
            L l = L::skin;
            if (t.lips[k] > 0.5)
                l = L::lips;
            else if (t.sclera[k] > 0.5)
                l = L::eyes;
            else if (t.brows[k] > 0.5)
                l = L::brows;
            else if (t.eyelids[k] > 0.5)
                l = L::eyelids;
            else if (t.beard_full[k] > 0.5)
                l = L::beard;
            else if (f < 0.5)
                l = L::back;
            t.label[k] = l;
        }
    }
    return t;
}

}  // namespace facegen
