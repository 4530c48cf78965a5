#pragma once

#include "facegen/core/mesh.hpp"
#include "facegen/core/schema.hpp"
#include "facegen/corpus/generator.hpp"

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

namespace facegen {

struct CorpusEntry {
    std::string id;
    FaceMesh mesh;  // texture stored separately below
    RgbImage texture;
    DescriptiveCode annotation;
    IdentityParams identity;
    std::string freeform;
};

struct Corpus {
    std::uint64_t master_seed = 0;
    GeneratorConfig config;
    std::vector<CorpusEntry> entries;
    std::vector<std::size_t> train, test;  // indices into entries

    std::vector<FaceMesh> meshes(const std::vector<std::size_t>& which) const;
    std::vector<RgbImage> textures(const std::vector<std::size_t>& which) const;
};

// Identity i gets seed mix(master_seed, i); 80% of a seeded shuffle goes to
// the training split. Throws ArgumentError when count < 2.
Corpus generate_corpus(const FaceGenerator& gen, std::size_t count, std::uint64_t master_seed);

// corpus/{id}/mesh.obj, tex.png, annotation.json and manifest.json.
void save_corpus(const Corpus& corpus, const AttributeSchema& schema, const std::filesystem::path& dir);
// Throws SchemaError when the manifest was written with another schema.
Corpus load_corpus(const std::filesystem::path& dir, const AttributeSchema& schema);

}  // namespace facegen
