#pragma once

#include "facegen/core/schema.hpp"
#include "facegen/textparse/templates.hpp"

#include <cstdint>
#include <iosfwd>
#include <string>
#include <vector>

namespace facegen {

struct TextCodePair {
    std::string text;
    DescriptiveCode code;
};

// Pair i depends only on (seed, i): k uniform in [3, 24] attributes are
// specified with uniform options and composed into text.
TextCodePair make_training_pair(std::uint64_t seed, std::size_t index,
                                const TemplateSet& templates = TemplateSet::standard());
std::vector<TextCodePair> gen_training_pairs(std::size_t n, std::uint64_t seed,
                                             const TemplateSet& templates = TemplateSet::standard());

// One JSON record per line: {"text": ..., "code": {attribute: option}}.
void write_pairs_jsonl(std::ostream& out, const std::vector<TextCodePair>& pairs, const AttributeSchema& schema);
std::vector<TextCodePair> read_pairs_jsonl(std::istream& in, const AttributeSchema& schema);

}  // namespace facegen
