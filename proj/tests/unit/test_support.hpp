#pragma once

#include "facegen/corpus/corpus.hpp"
#include "facegen/corpus/generator.hpp"

#include <filesystem>
#include <unistd.h>
#include <string>

namespace facegen::test {

inline const FaceGenerator& generator() {
    static const FaceGenerator gen(AttributeSchema::standard());
    return gen;
}

// 256 identities, seed 7: the standard desk-scale corpus.
inline const Corpus& corpus256() {
    static const Corpus c = generate_corpus(generator(), 256, 7);
    return c;
}

inline std::vector<DescriptiveCode> codes_of(const Corpus& c, const std::vector<std::size_t>& which) {
    std::vector<DescriptiveCode> out;
    for (auto i : which) out.push_back(c.entries[i].annotation);
    return out;
}

// Fresh empty directory under the system temp dir, private to this process.
inline std::filesystem::path scratch_dir(const std::string& name) {
    const auto dir =
        std::filesystem::temp_directory_path() / ("facegen_test_" + name + "_" + std::to_string(::getpid()));
    std::filesystem::remove_all(dir);
    std::filesystem::create_directories(dir);
    return dir;
}

}  // namespace facegen::test
