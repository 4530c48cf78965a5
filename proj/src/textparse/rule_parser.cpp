#include "facegen/textparse/rule_parser.hpp"

#include "facegen/core/error.hpp"

#include <cctype>
#include <cstdlib>
#include <map>
#include <optional>

namespace facegen {

std::vector<std::string> tokenize_words(std::string_view sentence) {
    std::vector<std::string> words;
    std::string cur;
    for (char ch : sentence) {
        const auto c = static_cast<unsigned char>(ch);
        if (std::isalnum(c) || ch == '-' || ch == '\'') {
            cur += static_cast<char>(std::tolower(c));
        } else if (!cur.empty()) {
            words.push_back(std::move(cur));
            cur.clear();
        }
    }
    if (!cur.empty()) words.push_back(std::move(cur));
    return words;
}

std::vector<std::string> split_sentences(std::string_view text) {
    std::vector<std::string> out;
    std::string cur;
    for (char ch : text) {
        if (ch == '.' || ch == '!' || ch == '?' || ch == ';' || ch == '\n') {
            if (cur.find_first_not_of(" \t\r") != std::string::npos) out.push_back(cur);
            cur.clear();
        } else {
            cur += ch;
        }
    }
    if (cur.find_first_not_of(" \t\r") != std::string::npos) out.push_back(cur);
    return out;
}

namespace {

struct Candidate {
    std::size_t attribute;
    int option;
    bool canonical;
};

struct Lexicon {
    std::map<std::string, std::vector<Candidate>> options;
    std::map<std::string, std::vector<std::size_t>> nouns;
    std::size_t max_words = 1;
};

std::string join(const std::vector<std::string>& w, std::size_t from, std::size_t n) {
    std::string s = w[from];
    for (std::size_t k = 1; k < n; ++k) s += " " + w[from + k];
    return s;
}

std::size_t word_count(const std::string& phrase) { return tokenize_words(phrase).size(); }

Lexicon build_lexicon(const TemplateSet& templates) {
    Lexicon lex;
    const auto& schema = templates.schema();
    auto add_option = [&](const std::string& phrase, Candidate c) {
        const std::string key = join(tokenize_words(phrase), 0, word_count(phrase));
        lex.options[key].push_back(c);
        lex.max_words = std::max(lex.max_words, word_count(phrase));
    };
    for (std::size_t a = 0; a < schema.size(); ++a) {
        const auto& attr = schema[a];
        for (int o = 1; o < static_cast<int>(attr.option_count()); ++o) add_option(attr.options[o], {a, o, true});
        const auto& ph = templates.phrase(a);
        for (const auto& [word, label] : ph.synonyms) add_option(word, {a, schema.option_index(a, label), false});
        for (const auto& n : ph.nouns) {
            const auto words = tokenize_words(n);
            lex.nouns[join(words, 0, words.size())].push_back(a);
            lex.max_words = std::max(lex.max_words, words.size());
        }
    }
    return lex;
}

const Lexicon& lexicon_for(const TemplateSet& templates) {
    if (&templates == &TemplateSet::standard()) {
        static const Lexicon lex = build_lexicon(templates);
        return lex;
    }
    thread_local const TemplateSet* cached_for = nullptr;
    thread_local Lexicon cached;
    if (cached_for != &templates) {
        cached = build_lexicon(templates);
        cached_for = &templates;
    }
    return cached;
}

struct Mention {
    std::size_t start, length;
    std::vector<std::size_t> attributes;
};

// Longest match of phrases from `table` over the words, left to right.
template <class Table>
std::vector<std::pair<Mention, const typename Table::mapped_type*>> scan(const std::vector<std::string>& words,
                                                                          const Table& table, std::size_t max_words,
                                                                          std::vector<bool>& used) {
    std::vector<std::pair<Mention, const typename Table::mapped_type*>> out;
    for (std::size_t i = 0; i < words.size(); ++i) {
        if (used[i]) continue;
        for (std::size_t n = std::min(max_words, words.size() - i); n >= 1; --n) {
            bool free = true;
            for (std::size_t k = 0; k < n; ++k) free = free && !used[i + k];
            if (!free) continue;
            auto it = table.find(join(words, i, n));
            if (it == table.end()) continue;
            out.push_back({Mention{i, n, {}}, &it->second});
            for (std::size_t k = 0; k < n; ++k) used[i + k] = true;
            i += n - 1;
            break;
        }
    }
    return out;
}

}  // namespace

DescriptiveCode parse_rules(std::string_view text, const TemplateSet& templates) {
    const auto& schema = templates.schema();
    const Lexicon& lex = lexicon_for(templates);
    auto code = DescriptiveCode::unspecified(schema);
    std::vector<std::string> phrase_of(schema.size());

    for (const auto& sentence : split_sentences(text)) {
        const auto words = tokenize_words(sentence);
        std::vector<bool> used(words.size(), false);
        const auto nouns = scan(words, lex.nouns, lex.max_words, used);
        const auto options = scan(words, lex.options, lex.max_words, used);

        // Distance from an option mention to the nearest noun of an attribute.
        auto noun_distance = [&](std::size_t attribute, std::size_t pos) -> std::optional<std::pair<long, int>> {
            std::optional<std::pair<long, int>> best;
            for (const auto& [m, attrs] : nouns) {
                bool match = false;
                for (auto a : *attrs) match = match || a == attribute;
                if (!match) continue;
                const long d = std::labs(static_cast<long>(m.start) - static_cast<long>(pos));
                // A following noun wins a tie ("big eyes" over "eyes ... big").
                const std::pair<long, int> key{d, m.start > pos ? 0 : 1};
                if (!best || key < *best) best = key;
            }
            return best;
        };

        for (const auto& [mention, cands] : options) {
            const Candidate* chosen = nullptr;
            std::optional<std::tuple<long, int, int>> best;
            for (const auto& c : *cands) {
                if (auto d = noun_distance(c.attribute, mention.start)) {
                    const std::tuple<long, int, int> key{d->first, d->second, c.canonical ? 0 : 1};
                    if (!best || key < *best) {
                        best = key;
                        chosen = &c;
                    }
                }
            }
            if (!chosen)
                for (const auto& c : *cands)
                    if (c.canonical) chosen = &c;
            if (!chosen) {
                const Candidate* only = nullptr;
                int count = 0;
                for (const auto& c : *cands)
                    if (templates.phrase(c.attribute).nouns.empty()) {
                        only = &c;
                        ++count;
                    }
                if (count == 1) chosen = only;
            }
            if (!chosen) continue;

            const std::string phrase = join(words, mention.start, mention.length);
            const std::size_t a = chosen->attribute;
            if (code[a] != kUnspecified && code[a] != chosen->option)
                throw AmbiguityError("contradictory mentions of '" + schema[a].name + "': '" + phrase_of[a] +
                                         "' and '" + phrase + "'",
                                     phrase_of[a], phrase);
            code[a] = chosen->option;
            phrase_of[a] = phrase;
        }
    }
    return code;
}

}  // namespace facegen
