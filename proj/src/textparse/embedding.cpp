#include "facegen/textparse/embedding.hpp"

#include "facegen/core/hash.hpp"

#include <cctype>

namespace facegen {

std::string normalize_text(std::string_view text) {
    std::string out;
    bool space = false;
    for (char ch : text) {
        const auto c = static_cast<unsigned char>(ch);
        if (std::isspace(c)) {
            space = !out.empty();
            continue;
        }
        if (space) out += ' ';
        space = false;
        out += static_cast<char>(std::tolower(c));
    }
    return out;
}

namespace {
void add_feature(Eigen::VectorXd& v, std::string_view prefix, std::string_view body) {
    const std::uint64_t h = fnv1a64(body, fnv1a64(prefix));
    const double sign = (h >> 63) ? -1.0 : 1.0;
    v[static_cast<Eigen::Index>(h % kEmbeddingDim)] += sign;
}
}  // namespace

Eigen::VectorXd embed_text(std::string_view text) {
    const std::string norm = normalize_text(text);
    Eigen::VectorXd v = Eigen::VectorXd::Zero(kEmbeddingDim);

    std::string word;
    auto flush = [&] {
        if (!word.empty()) add_feature(v, "w:", word);
        word.clear();
    };
    for (char ch : norm) {
        const auto c = static_cast<unsigned char>(ch);
        if (ch == ' ')
            flush();
        else if (std::isalnum(c) || ch == '-' || ch == '\'')
            word += ch;
    }
    flush();
    for (std::size_t i = 0; i + 3 <= norm.size(); ++i) add_feature(v, "c:", std::string_view(norm).substr(i, 3));

    const double n = v.norm();
    if (n == 0.0) {
        v.setZero();
        v[0] = 1.0;
        return v;
    }
    return v / n;
}

}  // namespace facegen
