#pragma once

#include <algorithm>
#include <cstddef>
#include <string>
#include <string_view>
#include <vector>

#include "care/text.hpp"

namespace care {

/// Longest common subsequence length of two random-access sequences.
template <class SeqA, class SeqB>
std::size_t lcs_length(const SeqA& a, const SeqB& b) {
  const std::size_t m = std::size(b);
  std::vector<std::size_t> prev(m + 1, 0), cur(m + 1, 0);
  for (const auto& x : a) {
    for (std::size_t j = 1; j <= m; ++j) {
      cur[j] = x == b[j - 1] ? prev[j - 1] + 1 : std::max(prev[j], cur[j - 1]);
    }
    std::swap(prev, cur);
  }
  return prev[m];
}

/// Character (code point) LCS.
inline std::size_t lcs_chars(std::string_view a, std::string_view b) {
  return lcs_length(to_code_points(a), to_code_points(b));
}

}  // namespace care
