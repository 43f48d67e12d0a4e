#pragma once

#include <array>
#include <stdexcept>
#include <string>

namespace phylohmm {

// Canonical nucleotide order used everywhere: A, C, G, T.
inline constexpr int kNumBases = 4;
inline constexpr std::array<char, 4> kBases = {'A', 'C', 'G', 'T'};

// Index of a concrete base, or -1 for the missing-data characters N and '-'.
// Any other character throws.
inline int base_index(char c) {
  switch (c) {
    case 'A': return 0;
    case 'C': return 1;
    case 'G': return 2;
    case 'T': return 3;
    case 'N':
    case '-': return -1;
    default:
      throw std::invalid_argument(std::string("invalid DNA character '") + c +
                                  "'");
  }
}

inline bool is_missing(char c) { return c == 'N' || c == '-'; }

inline char index_base(int i) {
  if (i < 0 || i >= kNumBases) {
    throw std::invalid_argument("base index out of range: " +
                                std::to_string(i));
  }
  return kBases[static_cast<std::size_t>(i)];
}

}  // namespace phylohmm
