#include "facegen/textparse/templates.hpp"

#include "facegen/core/error.hpp"
#include "facegen/core/rng.hpp"

#include <numeric>

namespace facegen {

namespace {

AttributePhrase noun(std::vector<std::string> nouns, bool plural, bool countable,
                     std::vector<std::pair<std::string, std::string>> synonyms = {}) {
    return {std::move(nouns), plural, countable, std::move(synonyms)};
}

std::vector<AttributePhrase> standard_phrases() {
    return {
        noun({"face"}, false, true, {{"circular", "round"}, {"oblong", "long"}}),
        noun({"jaw", "jawline"}, false, true, {{"narrow", "slender"}, {"wide", "broad"}}),
        noun({"chin"}, false, true, {{"weak", "receding"}, {"prominent", "jutting"}}),
        noun({"cheeks"}, true, true, {{"sunken", "hollow"}, {"full", "chubby"}, {"plump", "chubby"}}),
        noun({"forehead"}, false, true, {{"short", "low"}, {"tall", "high"}}),
        noun({"eyes", "eye"}, true, true, {{"tiny", "small"}, {"large", "big"}, {"medium sized", "medium-sized"}}),
        noun({"eye corners", "eye corner"}, true, true, {{"drooping", "downturned"}, {"upward", "upturned"}}),
        noun({"eyes", "eye"}, true, true, {{"close", "close-set"}, {"close set", "close-set"}, {"wide set", "wide-set"}}),
        noun({"eyebrows", "brows"}, true, true, {{"thin", "sparse"}, {"thick", "bushy"}}),
        noun({"eyebrows", "brows"}, true, true, {{"flat", "straight"}, {"rounded", "curved"}}),
        noun({"nose"}, false, true, {{"small", "tiny"}, {"big", "large"}}),
        noun({"nostrils", "nose"}, true, true, {{"narrow", "pinched"}, {"wide", "flared"}}),
        noun({"mouth"}, false, true, {{"small", "narrow"}, {"big", "wide"}, {"large", "wide"}}),
        noun({"lips"}, true, true, {{"full", "thick"}, {"plump", "thick"}}),
        noun({"skin", "complexion"}, false, false, {{"light", "fair"}, {"olive", "tan"}, {"dark", "deep"}}),
        noun({"lips"}, true, true, {{"rosy", "pink"}, {"scarlet", "red"}}),
        noun({"eyebrows", "brows"}, true, true,
             {{"blond", "flaxen"}, {"blonde", "flaxen"}, {"brown", "chestnut"}, {"black", "jet-black"}}),
        noun({"facial hair"}, false, false, {{"stubble", "stubbly"}, {"clean shaven", "clean-shaven"}}),
        noun({"beard"}, false, true,
             {{"blond", "sandy"}, {"red", "russet"}, {"black", "dark"}, {"gray", "grey"}, {"white", "grey"}}),
        noun({"makeup", "make-up"}, false, false, {{"heavy", "dramatic"}, {"light", "natural"}}),
        noun({}, false, false, {{"man", "male"}, {"woman", "female"}}),
        noun({}, false, false, {{"old", "elderly"}, {"middle aged", "middle-aged"}}),
        noun({}, false, false, {{"east asian", "east-asian"}, {"south asian", "south-asian"}}),
        noun({}, false, false, {{"slim", "skinny"}, {"stocky", "heavyset"}}),
    };
}

bool starts_with_vowel(const std::string& s) {
    return !s.empty() && std::string_view("aeiou").find(s[0]) != std::string_view::npos;
}

}  // namespace

TemplateSet::TemplateSet(const AttributeSchema& schema, std::vector<AttributePhrase> phrases)
    : schema_(&schema), phrases_(std::move(phrases)) {
    if (phrases_.size() != schema.size()) throw SchemaError("template set does not cover every attribute");
    for (std::size_t a = 0; a < phrases_.size(); ++a)
        for (const auto& [word, label] : phrases_[a].synonyms) schema.option_index(a, label);
}

const TemplateSet& TemplateSet::standard() {
    static const TemplateSet set(AttributeSchema::standard(), standard_phrases());
    return set;
}

std::string TemplateSet::render(std::size_t attribute, int option, int pattern, bool female) const {
    const auto& attr = (*schema_)[attribute];
    if (option <= 0 || option >= static_cast<int>(attr.option_count()))
        throw ArgumentError("cannot render option " + std::to_string(option) + " of '" + attr.name + "'");
    if (pattern < 0 || pattern >= kPatterns) throw ArgumentError("unknown sentence pattern");
    const std::string& label = attr.options[option];
    const auto& ph = phrases_[attribute];
    const std::string subj = female ? "She" : "He";
    const std::string poss = female ? "Her" : "His";
    if (ph.nouns.empty()) return subj + (pattern == 0 ? " is " : " looks ") + label + ".";
    const std::string& n = ph.nouns.front();
    if (pattern == 0) return poss + " " + n + (ph.plural ? " are " : " is ") + label + ".";
    std::string article;
    if (!ph.plural && ph.countable) article = starts_with_vowel(label) ? "an " : "a ";
    return subj + " has " + article + label + " " + n + ".";
}

std::string compose_text(const DescriptiveCode& code, std::uint64_t seed, const TemplateSet& templates) {
    const auto& schema = templates.schema();
    code.validate(schema);
    const auto gender = schema.find("gender");
    const bool female = gender && schema[*gender].options[code[*gender]] == "female";

    Rng rng(seed);
    std::vector<std::string> sentences;
    for (std::size_t a = 0; a < code.size(); ++a) {
        if (code[a] == kUnspecified) continue;
        const int pattern = static_cast<int>(rng.below(TemplateSet::kPatterns));
        sentences.push_back(templates.render(a, code[a], pattern, female));
    }
    rng.shuffle(sentences);
    std::string text;
    for (const auto& s : sentences) {
        if (!text.empty()) text += ' ';
        text += s;
    }
    return text;
}

}  // namespace facegen
