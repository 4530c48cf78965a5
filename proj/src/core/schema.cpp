#include "facegen/core/schema.hpp"

#include "facegen/core/error.hpp"
#include "facegen/core/hash.hpp"

#include <algorithm>
#include <set>

namespace facegen {

std::string_view to_string(Category c) {
    switch (c) {
        case Category::shape: return "shape";
        case Category::color: return "color";
        case Category::general: return "general";
    }
    return "?";
}

std::string_view to_string(Branch b) { return b == Branch::shape ? "shape" : "texture"; }

int Attribute::antonym_of(int option) const {
    for (auto [a, b] : antonyms) {
        if (a == option) return b;
        if (b == option) return a;
    }
    return -1;
}

AttributeSchema::AttributeSchema(std::vector<Attribute> attributes)
    : attributes_(std::move(attributes)) {
    if (attributes_.size() != kNumAttributes)
        throw SchemaError("schema must have exactly " + std::to_string(kNumAttributes) +
                          " attributes, got " + std::to_string(attributes_.size()));
    std::set<std::string> names;
    bool seen[3] = {false, false, false};
    for (const auto& a : attributes_) {
        if (!names.insert(a.name).second) throw SchemaError("duplicate attribute '" + a.name + "'");
        if (a.options.size() < 3 || a.options.size() > kMaxOptions)
            throw SchemaError("attribute '" + a.name + "' must have 3 to 8 options");
        if (a.options[0] != "unspecified")
            throw SchemaError("attribute '" + a.name + "' option 0 must be 'unspecified'");
        std::set<std::string> labels(a.options.begin(), a.options.end());
        if (labels.size() != a.options.size())
            throw SchemaError("attribute '" + a.name + "' has duplicate option labels");
        const int n = static_cast<int>(a.options.size());
        for (auto [x, y] : a.antonyms) {
            if (x == y || x <= 0 || y <= 0 || x >= n || y >= n)
                throw SchemaError("attribute '" + a.name + "' has an invalid antonym pair");
        }
        if (a.category == Category::shape && a.branch != Branch::shape)
            throw SchemaError("shape attribute '" + a.name + "' must feed the shape branch");
        if (a.category == Category::color && a.branch != Branch::texture)
            throw SchemaError("color attribute '" + a.name + "' must feed the texture branch");
        seen[static_cast<int>(a.category)] = true;
    }
    if (!(seen[0] && seen[1] && seen[2]))
        throw SchemaError("every category needs at least one attribute");
}

namespace {

Attribute attr(std::string name, Category c, Branch b, std::vector<std::string> opts,
               std::vector<std::pair<int, int>> antonyms) {
    opts.insert(opts.begin(), "unspecified");
    return Attribute{std::move(name), c, b, std::move(opts), std::move(antonyms)};
}

}  // namespace

const AttributeSchema& AttributeSchema::standard() {
    using C = Category;
    using B = Branch;
    static const AttributeSchema schema({
        attr("face_shape", C::shape, B::shape, {"round", "oval", "long"}, {{1, 3}}),
        attr("jaw_width", C::shape, B::shape, {"slender", "moderate", "broad"}, {{1, 3}}),
        attr("chin_shape", C::shape, B::shape, {"receding", "balanced", "jutting"}, {{1, 3}}),
        attr("cheek_fullness", C::shape, B::shape, {"hollow", "normal", "chubby"}, {{1, 3}}),
        attr("forehead_height", C::shape, B::shape, {"low", "medium-height", "high"}, {{1, 3}}),
        attr("eye_size", C::shape, B::shape, {"small", "medium-sized", "big"}, {{1, 3}}),
        attr("eye_shape", C::shape, B::shape, {"downturned", "level", "upturned"}, {{1, 3}}),
        attr("eye_spacing", C::shape, B::shape, {"close-set", "evenly-spaced", "wide-set"},
             {{1, 3}}),
        attr("eyebrow_thickness", C::shape, B::shape, {"sparse", "medium-thick", "bushy"},
             {{1, 3}}),
        attr("eyebrow_shape", C::shape, B::shape, {"straight", "curved", "arched"}, {{1, 3}}),
        attr("nose_size", C::shape, B::shape, {"tiny", "regular", "large"}, {{1, 3}}),
        attr("nose_width", C::shape, B::shape, {"pinched", "standard", "flared"}, {{1, 3}}),
        attr("mouth_width", C::shape, B::shape, {"narrow", "medium-width", "wide"}, {{1, 3}}),
        attr("lip_thickness", C::shape, B::shape, {"thin", "medium-full", "thick"}, {{1, 3}}),
        attr("skin_tone", C::color, B::texture, {"pale", "fair", "beige", "tan", "bronze", "deep"},
             {{1, 6}}),
        attr("lip_color", C::color, B::texture, {"nude", "pink", "red", "crimson"}, {{1, 4}}),
        attr("eyebrow_color", C::color, B::texture, {"flaxen", "chestnut", "jet-black"}, {{1, 3}}),
        attr("beard_style", C::color, B::texture, {"clean-shaven", "stubbly", "goatee", "full"},
             {{1, 4}}),
        attr("beard_color", C::color, B::texture, {"sandy", "russet", "dark", "grey"}, {{1, 3}}),
        attr("makeup", C::color, B::texture, {"bare", "natural", "dramatic"}, {{1, 3}}),
        attr("gender", C::general, B::shape, {"male", "female"}, {{1, 2}}),
        attr("age_band", C::general, B::shape, {"young", "middle-aged", "elderly"}, {{1, 3}}),
        attr("race", C::general, B::texture, {"east-asian", "caucasian", "african", "south-asian"},
             {}),
        attr("overall_build", C::general, B::shape, {"skinny", "average", "heavyset"}, {{1, 3}}),
    });
    return schema;
}

std::optional<std::size_t> AttributeSchema::find(std::string_view name) const {
    for (std::size_t i = 0; i < attributes_.size(); ++i)
        if (attributes_[i].name == name) return i;
    return std::nullopt;
}

std::size_t AttributeSchema::index_of(std::string_view name) const {
    if (auto i = find(name)) return *i;
    throw SchemaError("unknown attribute '" + std::string(name) + "'");
}

int AttributeSchema::option_index(std::size_t attribute, std::string_view label) const {
    const auto& opts = attributes_.at(attribute).options;
    auto it = std::find(opts.begin(), opts.end(), label);
    if (it == opts.end())
        throw SchemaError("unknown option '" + std::string(label) + "' for attribute '" +
                          attributes_[attribute].name + "'");
    return static_cast<int>(it - opts.begin());
}

std::vector<std::size_t> AttributeSchema::rows_of(Branch b) const {
    std::vector<std::size_t> rows;
    for (std::size_t i = 0; i < attributes_.size(); ++i)
        if (attributes_[i].branch == b) rows.push_back(i);
    return rows;
}

std::string AttributeSchema::fingerprint() const {
    std::string canon;
    for (const auto& a : attributes_) {
        canon += a.name;
        canon += '|';
        canon += to_string(a.category);
        canon += '|';
        canon += to_string(a.branch);
        for (const auto& o : a.options) {
            canon += '|';
            canon += o;
        }
        for (auto [x, y] : a.antonyms) canon += "|" + std::to_string(x) + "~" + std::to_string(y);
        canon += '\n';
    }
    return to_hex(fnv1a64(canon));
}

DescriptiveCode DescriptiveCode::unspecified(const AttributeSchema& schema) {
    return DescriptiveCode(std::vector<int>(schema.size(), kUnspecified));
}

DescriptiveCode DescriptiveCode::from_onehot(const Eigen::MatrixXd& onehot) {
    if (onehot.cols() != static_cast<Eigen::Index>(kMaxOptions))
        throw ValidationError("one-hot code must have " + std::to_string(kMaxOptions) + " columns");
    std::vector<int> opts(onehot.rows());
    for (Eigen::Index r = 0; r < onehot.rows(); ++r) {
        int hot = -1;
        for (Eigen::Index c = 0; c < onehot.cols(); ++c) {
            const double v = onehot(r, c);
            if (v == 1.0 && hot < 0)
                hot = static_cast<int>(c);
            else if (v != 0.0)
                throw ValidationError("row " + std::to_string(r) + " is not one-hot");
        }
        if (hot < 0) throw ValidationError("row " + std::to_string(r) + " is not one-hot");
        opts[r] = hot;
    }
    return DescriptiveCode(std::move(opts));
}

void DescriptiveCode::validate(const AttributeSchema& schema) const {
    if (options_.size() != schema.size())
        throw ValidationError("invalid code: " + std::to_string(options_.size()) +
                              " rows for a schema of " + std::to_string(schema.size()));
    for (std::size_t i = 0; i < options_.size(); ++i) {
        if (options_[i] < 0 || options_[i] >= static_cast<int>(schema[i].option_count()))
            throw ValidationError("invalid code: option " + std::to_string(options_[i]) +
                                  " out of range for '" + schema[i].name + "'");
    }
}

std::size_t DescriptiveCode::specified_count() const {
    return static_cast<std::size_t>(
        std::count_if(options_.begin(), options_.end(), [](int o) { return o != kUnspecified; }));
}

Eigen::MatrixXd DescriptiveCode::onehot() const {
    Eigen::MatrixXd m = Eigen::MatrixXd::Zero(options_.size(), kMaxOptions);
    for (std::size_t i = 0; i < options_.size(); ++i) m(i, options_[i]) = 1.0;
    return m;
}

Eigen::VectorXd DescriptiveCode::flatten(const std::vector<std::size_t>& rows) const {
    Eigen::VectorXd v = Eigen::VectorXd::Zero(rows.size() * kMaxOptions);
    for (std::size_t k = 0; k < rows.size(); ++k) v(k * kMaxOptions + options_.at(rows[k])) = 1.0;
    return v;
}

SplitCode split_code(const DescriptiveCode& code, const AttributeSchema& schema) {
    code.validate(schema);
    SplitCode out;
    out.shape_rows = schema.rows_of(Branch::shape);
    out.texture_rows = schema.rows_of(Branch::texture);
    const Eigen::MatrixXd full = code.onehot();
    out.shape.resize(out.shape_rows.size(), kMaxOptions);
    out.texture.resize(out.texture_rows.size(), kMaxOptions);
    for (std::size_t k = 0; k < out.shape_rows.size(); ++k) out.shape.row(k) = full.row(out.shape_rows[k]);
    for (std::size_t k = 0; k < out.texture_rows.size(); ++k)
        out.texture.row(k) = full.row(out.texture_rows[k]);
    return out;
}

DescriptiveCode merge_code(const SplitCode& split, const AttributeSchema& schema) {
    if (split.shape_rows.size() + split.texture_rows.size() != schema.size() ||
        split.shape.rows() != static_cast<Eigen::Index>(split.shape_rows.size()) ||
        split.texture.rows() != static_cast<Eigen::Index>(split.texture_rows.size()))
        throw ValidationError("invalid code: split does not cover the schema");
    Eigen::MatrixXd full = Eigen::MatrixXd::Zero(schema.size(), kMaxOptions);
    for (std::size_t k = 0; k < split.shape_rows.size(); ++k) full.row(split.shape_rows[k]) = split.shape.row(k);
    for (std::size_t k = 0; k < split.texture_rows.size(); ++k)
        full.row(split.texture_rows[k]) = split.texture.row(k);
    auto code = DescriptiveCode::from_onehot(full);
    code.validate(schema);
    return code;
}

}  // namespace facegen
