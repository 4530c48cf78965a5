#pragma once

#include "facegen/core/schema.hpp"
#include "facegen/textparse/templates.hpp"

#include <string>
#include <string_view>
#include <vector>

namespace facegen {

// Lowercased words; letters, digits, '-' and '\'' stay inside a word.
std::vector<std::string> tokenize_words(std::string_view sentence);
// Split on '.', '!', '?', ';' and newlines.
std::vector<std::string> split_sentences(std::string_view text);

// Longest-match extraction of option phrases per sentence. A word that is an
// option of several attributes (canonical label or synonym) goes to the
// attribute whose noun is nearest in the same sentence; without any noun the
// canonical label wins. Throws AmbiguityError when one attribute is mentioned
// with two different options.
DescriptiveCode parse_rules(std::string_view text, const TemplateSet& templates = TemplateSet::standard());

}  // namespace facegen
