#pragma once

#include "facegen/core/schema.hpp"

#include <cstdint>
#include <string>
#include <vector>

namespace facegen {

// How an attribute is talked about in composed text.
struct AttributePhrase {
    std::vector<std::string> nouns;  // nouns[0] is used when composing
    bool plural = false;
    bool countable = true;  // singular countable nouns take "a"/"an"
    // Synonym word (or phrase) -> canonical option label, accepted by the
    // rule parser only.
    std::vector<std::pair<std::string, std::string>> synonyms;
};

// Two sentence patterns per attribute:
//   A: "{Poss} {noun} {is|are} {option}."   e.g. "His eyes are medium-sized."
//   B: "{Subj} has {a} {option} {noun}."    e.g. "He has big eyes."
// General attributes with no noun use "{Subj} is {option}." and
// "{Subj} looks {option}.". Pronouns follow the gender attribute.
class TemplateSet {
   public:
    static constexpr int kPatterns = 2;

    TemplateSet(const AttributeSchema& schema, std::vector<AttributePhrase> phrases);
    static const TemplateSet& standard();

    const AttributeSchema& schema() const { return *schema_; }
    const AttributePhrase& phrase(std::size_t attribute) const { return phrases_[attribute]; }

    // Throws ArgumentError for option 0 or an out-of-range pattern.
    std::string render(std::size_t attribute, int option, int pattern, bool female) const;

   private:
    const AttributeSchema* schema_;
    std::vector<AttributePhrase> phrases_;
};

// One sentence per specified attribute; pattern choice and sentence order are
// drawn from `seed`. The all-unspecified code composes to "".
std::string compose_text(const DescriptiveCode& code, std::uint64_t seed,
                         const TemplateSet& templates = TemplateSet::standard());

}  // namespace facegen
