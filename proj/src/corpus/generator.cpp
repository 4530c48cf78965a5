#include "facegen/corpus/generator.hpp"

#include "facegen/core/error.hpp"
#include "facegen/core/rng.hpp"

#include <array>
#include <cmath>
#include <map>

namespace facegen {

IdentityParams IdentityParams::random(const AttributeSchema& schema, std::uint64_t seed) {
    IdentityParams p;
    p.seed = seed;
    Rng rng(seed);
    p.options = DescriptiveCode::unspecified(schema);
    p.jitter.resize(schema.size());
    for (std::size_t a = 0; a < schema.size(); ++a) {
        p.options[a] = rng.between(1, static_cast<int>(schema[a].option_count()) - 1);
        p.jitter[a] = rng.uniform(-0.5, 0.5);
    }
    return p;
}

void IdentityParams::validate(const AttributeSchema& schema) const {
    options.validate(schema);
    if (jitter.size() != schema.size()) throw ValidationError("identity jitter must have one entry per attribute");
    for (double j : jitter)
        if (!(j >= -0.5 && j <= 0.5)) throw ValidationError("identity jitter outside [-0.5, 0.5]");
}

namespace {

struct Bump {
    Eigen::Vector2d center;
    Eigen::Vector3d direction;
    double radius;
};

const std::map<std::string, double> kAmplitude = {
    {"face_shape", 6.0},      {"jaw_width", 5.0},     {"chin_shape", 6.0},       {"cheek_fullness", 4.0},
    {"forehead_height", 6.0}, {"eye_size", 2.0},      {"eye_shape", 2.5},        {"eye_spacing", 3.0},
    {"eyebrow_thickness", 2.0}, {"eyebrow_shape", 3.0}, {"nose_size", 5.0},      {"nose_width", 3.0},
    {"mouth_width", 4.0},     {"lip_thickness", 2.5}, {"gender", 3.0},           {"age_band", 3.0},
    {"overall_build", 4.0},
};

// Combined fields of the general attributes, as weights of other fields.
const std::map<std::string, std::vector<std::pair<std::string, double>>> kCombined = {
    {"gender", {{"jaw_width", -0.6}, {"chin_shape", -0.4}, {"eyebrow_thickness", -0.5}, {"eye_size", 0.3}}},
    {"age_band", {{"nose_size", 0.4}, {"lip_thickness", -0.5}}},
    {"overall_build", {{"cheek_fullness", 1.0}, {"jaw_width", 0.6}, {"face_shape", -0.3}}},
};

void normalize(Vertices& f) {
    const double mx = f.rowwise().norm().maxCoeff();
    if (mx > 0.0) f /= mx;
}

// Skin palette from lightest to darkest.
const std::array<Eigen::Vector3d, 6> kSkin = {
    Eigen::Vector3d(0.97, 0.87, 0.80), Eigen::Vector3d(0.92, 0.78, 0.68), Eigen::Vector3d(0.85, 0.68, 0.55),
    Eigen::Vector3d(0.74, 0.55, 0.40), Eigen::Vector3d(0.58, 0.40, 0.27), Eigen::Vector3d(0.40, 0.26, 0.17)};

Eigen::Vector3d palette_at(double t) {
    t = std::clamp(t, 0.0, 1.0) * (kSkin.size() - 1);
    const std::size_t i = std::min<std::size_t>(static_cast<std::size_t>(t), kSkin.size() - 2);
    const double f = t - static_cast<double>(i);
    return (1.0 - f) * kSkin[i] + f * kSkin[i + 1];
}

Eigen::Vector3d rgb(double r, double g, double b) { return {r, g, b}; }

void blend(RgbImage& img, std::size_t k, const Eigen::Vector3d& color, double alpha) {
    if (alpha <= 0.0) return;
    alpha = std::min(alpha, 1.0);
    for (int c = 0; c < 3; ++c) img.data[k * 3 + c] = (1.0 - alpha) * img.data[k * 3 + c] + alpha * color[c];
}

}  // namespace

FaceGenerator::FaceGenerator(const AttributeSchema& schema, GeneratorConfig cfg)
    : schema_(&schema),
      cfg_(cfg),
      face_(cfg.mesh),
      layout_(make_texture_layout(face_, cfg.texture_size, cfg.texture_size)) {
    const FaceMesh& m = face_.mesh();
    const auto n = static_cast<Eigen::Index>(m.num_vertices());
    std::vector<Eigen::Vector2d> design(n);
    std::vector<double> weight(n);
    for (Eigen::Index k = 0; k < n; ++k) {
        design[k] = face_.design_xy(m.vertices.row(k).transpose());
        weight[k] = face_.front_weight(m.uv(k, 0));
    }
    const auto& lmi = face_.masks().landmark_indices;
    auto lm = [&](int i) { return design[lmi[i]]; };
    auto field_of = [&](const std::vector<Bump>& bumps) {
        Vertices f = Vertices::Zero(n, 3);
        for (Eigen::Index k = 0; k < n; ++k) {
            if (weight[k] <= 0.0) continue;
            for (const auto& b : bumps) {
                const double d2 = (design[k] - b.center).squaredNorm();
                f.row(k) += weight[k] * std::exp(-0.5 * d2 / (b.radius * b.radius)) * b.direction.transpose();
            }
        }
        normalize(f);
        return f;
    };
    const Eigen::Vector3d X(1, 0, 0), Y(0, 1, 0), Z(0, 0, 1);
    std::map<std::string, std::vector<Bump>> bumps = {
        {"face_shape", {{lm(8), -Y, 25.0}, {{-55, -40}, 0.5 * X, 18.0}, {{55, -40}, -0.5 * X, 18.0}}},
        {"jaw_width", {{lm(4), -X, 18.0}, {lm(12), X, 18.0}}},
        {"chin_shape", {{lm(8), Z, 18.0}}},
        {"cheek_fullness", {{{-45, -25}, Eigen::Vector3d(-0.7, 0, 0.7), 16.0}, {{45, -25}, Eigen::Vector3d(0.7, 0, 0.7), 16.0}}},
        {"forehead_height", {{{0, 70}, Y, 30.0}}},
        {"eye_size", {{lm(37), Y, 5.0}, {lm(44), Y, 5.0}, {lm(41), -Y, 5.0}, {lm(46), -Y, 5.0}}},
        {"eye_shape", {{lm(36), Y, 6.0}, {lm(45), Y, 6.0}}},
        {"eye_spacing", {{{-32, 0}, -X, 12.0}, {{32, 0}, X, 12.0}}},
        {"eyebrow_thickness", {{lm(19), Z, 10.0}, {lm(24), Z, 10.0}}},
        {"eyebrow_shape", {{lm(19), Y, 8.0}, {lm(24), Y, 8.0}}},
        {"nose_size", {{lm(30), Z, 12.0}}},
        {"nose_width", {{lm(31), -X, 7.0}, {lm(35), X, 7.0}}},
        {"mouth_width", {{lm(48), -X, 10.0}, {lm(54), X, 10.0}}},
        {"lip_thickness", {{lm(51), Y, 6.0}, {lm(57), -Y, 6.0}}},
        {"age_band", {{{-45, -35}, -Y, 15.0}, {{45, -35}, -Y, 15.0}}},
    };

    fields_.assign(schema.size(), Vertices::Zero(n, 3));
    amplitude_.assign(schema.size(), 0.0);
    std::map<std::string, Vertices> base;
    for (const auto& [name, b] : bumps) base[name] = field_of(b);
    for (std::size_t a = 0; a < schema.size(); ++a) {
        const auto& attr = schema[a];
        if (attr.branch != Branch::shape) continue;
        auto amp = kAmplitude.find(attr.name);
        if (amp == kAmplitude.end()) continue;
        Vertices f = Vertices::Zero(n, 3);
        if (auto it = base.find(attr.name); it != base.end()) f = it->second;
        if (auto it = kCombined.find(attr.name); it != kCombined.end())
            for (const auto& [other, w] : it->second) f += w * base.at(other);
        normalize(f);
        fields_[a] = f;
        amplitude_[a] = amp->second;
    }
}

double FaceGenerator::level(std::size_t attribute, int option) const {
    const int n = static_cast<int>((*schema_)[attribute].option_count()) - 1;
    if (option <= 0 || n < 2) return 0.0;
    return -1.0 + 2.0 * (option - 1) / (n - 1);
}

FaceMesh FaceGenerator::mesh(const IdentityParams& p) const {
    p.validate(*schema_);
    FaceMesh out = face_.mesh();
    out.texture.reset();
    for (std::size_t a = 0; a < schema_->size(); ++a) {
        if (amplitude_[a] == 0.0) continue;
        const double s = level(a, p.options[a]) * amplitude_[a] * (1.0 + 0.4 * p.jitter[a]);
        if (s != 0.0) out.vertices += s * fields_[a];
    }
    return out;
}

RgbImage FaceGenerator::texture(const IdentityParams& p) const {
    p.validate(*schema_);
    const auto& s = *schema_;
    auto opt = [&](const char* name) -> std::pair<std::string, double> {
        const auto a = s.find(name);
        if (!a) return {"unspecified", 0.0};
        return {s[*a].options[p.options[*a]], p.jitter[*a]};
    };
    auto rank = [&](const char* name) {
        const auto a = s.find(name);
        return a ? std::pair<int, int>{p.options[*a], static_cast<int>(s[*a].option_count()) - 1}
                 : std::pair<int, int>{0, 1};
    };

    const auto [tone, tone_n] = rank("skin_tone");
    const double tone_j = opt("skin_tone").second;
    const double t = tone == 0 ? 0.5 : (tone - 1 + 0.4 * tone_j) / std::max(1, tone_n - 1);
    Eigen::Vector3d skin = palette_at(t);
    static const std::map<std::string, Eigen::Vector3d> race_shift = {
        {"east-asian", rgb(0.02, 0.015, -0.02)},
        {"caucasian", rgb(0.02, -0.01, -0.01)},
        {"african", rgb(-0.02, -0.025, -0.02)},
        {"south-asian", rgb(0.0, -0.01, -0.03)}};
    if (auto it = race_shift.find(opt("race").first); it != race_shift.end()) skin += it->second;

    static const std::map<std::string, Eigen::Vector3d> lip_palette = {
        {"nude", rgb(0.80, 0.55, 0.50)}, {"pink", rgb(0.90, 0.50, 0.60)},
        {"red", rgb(0.80, 0.15, 0.18)},  {"crimson", rgb(0.55, 0.05, 0.12)}};
    static const std::map<std::string, Eigen::Vector3d> brow_palette = {
        {"flaxen", rgb(0.80, 0.70, 0.45)}, {"chestnut", rgb(0.45, 0.28, 0.15)}, {"jet-black", rgb(0.08, 0.07, 0.07)}};
    static const std::map<std::string, Eigen::Vector3d> beard_palette = {
        {"sandy", rgb(0.72, 0.58, 0.36)}, {"russet", rgb(0.55, 0.25, 0.12)},
        {"dark", rgb(0.12, 0.10, 0.09)},  {"grey", rgb(0.62, 0.62, 0.62)}};

    const auto [lip_name, lip_j] = opt("lip_color");
    const Eigen::Vector3d lip = lip_palette.count(lip_name) ? lip_palette.at(lip_name)
                                                            : Eigen::Vector3d(skin.cwiseProduct(rgb(0.95, 0.72, 0.72)));
    const auto [brow_name, brow_j] = opt("eyebrow_color");
    const Eigen::Vector3d brow = brow_palette.count(brow_name) ? brow_palette.at(brow_name) : rgb(0.30, 0.22, 0.16);
    const auto [beard_name, beard_j] = opt("beard_color");
    const Eigen::Vector3d beard = beard_palette.count(beard_name) ? beard_palette.at(beard_name) : rgb(0.30, 0.25, 0.20);
    const auto [style, style_j] = opt("beard_style");
    const auto [makeup, makeup_j] = opt("makeup");

    double beard_alpha = 0.0;
    bool chin_only = false;
    if (style == "stubbly") beard_alpha = 0.35;
    if (style == "goatee") beard_alpha = 0.85, chin_only = true;
    if (style == "full") beard_alpha = 0.85;
    beard_alpha *= 1.0 + 0.2 * style_j;
    double shadow_alpha = 0.0, lip_boost = 0.0;
    Eigen::Vector3d shadow = rgb(0.45, 0.32, 0.28);
    if (makeup == "natural") shadow_alpha = 0.3, lip_boost = 0.05;
    if (makeup == "dramatic") shadow_alpha = 0.65, lip_boost = 0.12, shadow = rgb(0.25, 0.12, 0.22);
    shadow_alpha *= 1.0 + 0.4 * makeup_j;

    const auto& L = layout_;
    RgbImage img(L.width, L.height);
    const Eigen::Vector3d back = 0.92 * skin;
    for (std::size_t k = 0; k < L.label.size(); ++k) {
        const double f = L.front[k];
        const Eigen::Vector3d base = f * skin + (1.0 - f) * back;
        for (int c = 0; c < 3; ++c) img.data[k * 3 + c] = base[c];
        if (f <= 0.0) continue;
        blend(img, k, lip, 0.9 * (1.0 + 0.1 * lip_j) * L.lips[k]);
        if (lip_boost > 0.0) img.data[k * 3] += lip_boost * L.lips[k];
        blend(img, k, brow, 0.85 * (1.0 + 0.1 * brow_j) * L.brows[k]);
        blend(img, k, shadow, shadow_alpha * L.eyelids[k]);
        blend(img, k, beard, beard_alpha * (chin_only ? L.beard_chin[k] : L.beard_full[k]) * (1.0 + 0.05 * beard_j));
        blend(img, k, rgb(0.95, 0.95, 0.93), L.sclera[k]);
        blend(img, k, rgb(0.25, 0.18, 0.12), L.iris[k]);
    }
    return img;
}

int FaceGenerator::anchor_vertex(double x, double y) const {
    const FaceMesh& m = face_.mesh();
    const auto& region = face_.masks().region_of_vertex;
    int best = -1;
    double best_d = 0.0;
    for (Eigen::Index k = 0; k < m.vertices.rows(); ++k) {
        if (region[k] == Region::back_head) continue;
        const double d = (face_.design_xy(m.vertices.row(k).transpose()) - Eigen::Vector2d(x, y)).squaredNorm();
        if (best < 0 || d < best_d) best = static_cast<int>(k), best_d = d;
    }
    return best;
}

MeasurementTable::MeasurementTable(const FaceGenerator& gen)
    : gen_(&gen),
      lm_(gen.face().masks().landmark_indices),
      cheek_l_(gen.anchor_vertex(-45, -25)),
      cheek_r_(gen.anchor_vertex(45, -25)),
      forehead_(gen.anchor_vertex(0, 70)) {}

std::vector<std::string> MeasurementTable::attributes() const {
    return {"face_shape",    "jaw_width",         "chin_shape",    "cheek_fullness", "forehead_height",
            "eye_size",      "eye_shape",         "eye_spacing",   "eyebrow_thickness", "eyebrow_shape",
            "nose_size",     "nose_width",        "mouth_width",   "lip_thickness"};
}

std::optional<double> MeasurementTable::measure(const std::string& attribute, const FaceMesh& mesh) const {
    const auto& v = mesh.vertices;
    if (mesh.num_vertices() != gen_->face().mesh().num_vertices())
        throw ValidationError("mesh does not share the template topology");
    auto x = [&](int i) { return v(lm_[i], 0); };
    auto y = [&](int i) { return v(lm_[i], 1); };
    auto z = [&](int i) { return v(lm_[i], 2); };
    if (attribute == "face_shape") return y(27) - y(8);
    if (attribute == "jaw_width") return x(12) - x(4);
    if (attribute == "chin_shape") return z(8) - z(27);
    if (attribute == "cheek_fullness") return (v.row(cheek_r_) - v.row(cheek_l_)).norm();
    if (attribute == "forehead_height") return v(forehead_, 1) - y(27);
    if (attribute == "eye_size") return y(37) - y(41) + y(44) - y(46);
    if (attribute == "eye_shape") return y(36) + y(45) - y(39) - y(42);
    if (attribute == "eye_spacing") return x(42) - x(39);
    if (attribute == "eyebrow_thickness") return z(19) + z(24) - 2.0 * z(27);
    if (attribute == "eyebrow_shape") return y(19) - y(17) + y(24) - y(26);
    if (attribute == "nose_size") return z(30) - z(27);
    if (attribute == "nose_width") return x(35) - x(31);
    if (attribute == "mouth_width") return x(54) - x(48);
    if (attribute == "lip_thickness") return y(51) - y(57);
    return std::nullopt;
}

double mean_skin_luminance(const RgbImage& tex, const TextureLayout& layout) {
    double sum = 0.0;
    std::size_t n = 0;
    for (std::size_t k = 0; k < layout.label.size(); ++k) {
        if (layout.label[k] != TextureLayout::Label::skin) continue;
        sum += luminance(tex.data[3 * k], tex.data[3 * k + 1], tex.data[3 * k + 2]);
        ++n;
    }
    return n ? sum / static_cast<double>(n) : 0.0;
}

double mean_lip_redness(const RgbImage& tex, const TextureLayout& layout) {
    double sum = 0.0;
    std::size_t n = 0;
    for (std::size_t k = 0; k < layout.label.size(); ++k) {
        if (layout.label[k] != TextureLayout::Label::lips) continue;
        sum += tex.data[3 * k] - 0.5 * (tex.data[3 * k + 1] + tex.data[3 * k + 2]);
        ++n;
    }
    return n ? sum / static_cast<double>(n) : 0.0;
}

}  // namespace facegen
