#pragma once

#include <Eigen/Core>

#include <string>
#include <string_view>

namespace facegen {

inline constexpr int kEmbeddingDim = 512;

// Lowercase, whitespace runs collapsed to one space, trimmed.
std::string normalize_text(std::string_view text);

// Signed feature hashing of word unigrams ("w:" + word without punctuation)
// and character 3-grams ("c:" + substring of the normalized text) into 512
// bins with FNV-1a 64 (bin = h % 512, sign from the top bit), then unit
// l2-normalized. Text without features maps to e_0.
Eigen::VectorXd embed_text(std::string_view text);

}  // namespace facegen
