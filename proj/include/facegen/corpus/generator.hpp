#pragma once

#include "facegen/core/face_template.hpp"
#include "facegen/core/mesh.hpp"
#include "facegen/core/schema.hpp"

#include <Eigen/Core>

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

namespace facegen {

struct IdentityParams {
    std::uint64_t seed = 0;
    DescriptiveCode options;
    std::vector<double> jitter;  // per attribute, in [-0.5, 0.5]

    // Options uniform over the specified labels, jitter uniform, all from `seed`.
    static IdentityParams random(const AttributeSchema& schema, std::uint64_t seed);
    void validate(const AttributeSchema& schema) const;
};

struct GeneratorConfig {
    TemplateConfig mesh;
    int texture_size = 256;
};

// Maps identity parameters to geometry and texture. Each shape-branch
// attribute owns a fixed smooth displacement field scaled by its option level
// in [-1, 1] and a +-20% jitter; color attributes recolor soft UV regions.
class FaceGenerator {
   public:
    FaceGenerator(const AttributeSchema& schema, GeneratorConfig cfg = {});

    const AttributeSchema& schema() const { return *schema_; }
    const FaceTemplate& face() const { return face_; }
    const TextureLayout& layout() const { return layout_; }
    const GeneratorConfig& config() const { return cfg_; }

    // Option rank mapped to [-1, 1]; 0 for "unspecified".
    double level(std::size_t attribute, int option) const;

    FaceMesh mesh(const IdentityParams& p) const;
    RgbImage texture(const IdentityParams& p) const;
    // Unit-amplitude displacement field of an attribute (N x 3), zero for
    // texture-branch attributes.
    const Vertices& field(std::size_t attribute) const { return fields_[attribute]; }
    double amplitude(std::size_t attribute) const { return amplitude_[attribute]; }

    // Index of the front-face template vertex nearest a design-frame point.
    int anchor_vertex(double x, double y) const;

   private:
    const AttributeSchema* schema_;
    GeneratorConfig cfg_;
    FaceTemplate face_;
    TextureLayout layout_;
    std::vector<Vertices> fields_;
    std::vector<double> amplitude_;
};

// Controlled geometric measurement of a shape attribute (mm), increasing in
// option rank. std::nullopt for attributes without one.
class MeasurementTable {
   public:
    explicit MeasurementTable(const FaceGenerator& gen);
    std::optional<double> measure(const std::string& attribute, const FaceMesh& mesh) const;
    std::vector<std::string> attributes() const;

   private:
    const FaceGenerator* gen_;
    std::vector<int> lm_;
    int cheek_l_, cheek_r_, forehead_;
};

// Mean luminance of a texture over the skin texels of a layout.
double mean_skin_luminance(const RgbImage& tex, const TextureLayout& layout);
// Mean of R - (G + B) / 2 over the lip texels.
double mean_lip_redness(const RgbImage& tex, const TextureLayout& layout);

}  // namespace facegen
