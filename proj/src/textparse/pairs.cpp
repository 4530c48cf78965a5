#include "facegen/textparse/pairs.hpp"

#include "facegen/core/code_io.hpp"
#include "facegen/core/error.hpp"
#include "facegen/core/rng.hpp"

#include <json.hpp>

#include <istream>
#include <numeric>
#include <ostream>

namespace facegen {

TextCodePair make_training_pair(std::uint64_t seed, std::size_t index, const TemplateSet& templates) {
    const auto& schema = templates.schema();
    Rng rng(Rng::mix(seed, index));
    const int k = rng.between(3, static_cast<int>(schema.size()));
    std::vector<std::size_t> rows(schema.size());
    std::iota(rows.begin(), rows.end(), std::size_t{0});
    rng.shuffle(rows);
    auto code = DescriptiveCode::unspecified(schema);
    for (int i = 0; i < k; ++i) {
        const auto a = rows[i];
        code[a] = rng.between(1, static_cast<int>(schema[a].option_count()) - 1);
    }
    return {compose_text(code, rng.next_u64(), templates), code};
}

std::vector<TextCodePair> gen_training_pairs(std::size_t n, std::uint64_t seed, const TemplateSet& templates) {
    if (n < 1) throw ArgumentError("need at least one training pair");
    std::vector<TextCodePair> pairs;
    pairs.reserve(n);
    for (std::size_t i = 0; i < n; ++i) pairs.push_back(make_training_pair(seed, i, templates));
    return pairs;
}

void write_pairs_jsonl(std::ostream& out, const std::vector<TextCodePair>& pairs, const AttributeSchema& schema) {
    for (const auto& p : pairs) {
        nlohmann::json j;
        j["text"] = p.text;
        j["code"] = code_to_json(p.code, schema);
        out << j.dump() << '\n';
    }
}

std::vector<TextCodePair> read_pairs_jsonl(std::istream& in, const AttributeSchema& schema) {
    std::vector<TextCodePair> pairs;
    std::string line;
    std::size_t lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
        nlohmann::json j;
        try {
            j = nlohmann::json::parse(line);
        } catch (const nlohmann::json::parse_error& e) {
            throw ParseError(e.what(), lineno);
        }
        if (!j.is_object() || !j.contains("text") || !j.contains("code"))
            throw ParseError("pair record needs 'text' and 'code'", lineno);
        pairs.push_back({j.at("text").get<std::string>(), code_from_json(j.at("code"), schema)});
    }
    return pairs;
}

}  // namespace facegen
