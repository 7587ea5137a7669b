#pragma once

#include <algorithm>
#include <cstdint>
#include <map>
#include <string>
#include <utility>
#include <vector>

#include "stencil.hpp"

namespace qlga {

struct EquivalenceClass {
  int mass = 0;
  Vec momentum{0, 0, 0};
  std::vector<std::uint32_t> members;  // ascending; rank in this list is the class index k

  std::size_t size() const { return members.size(); }
  bool nontrivial() const { return members.size() >= 2 && mass >= 2; }
  int rank_of(std::uint32_t mask) const {
    auto it = std::lower_bound(members.begin(), members.end(), mask);
    return (it != members.end() && *it == mask) ? static_cast<int>(it - members.begin()) : -1;
  }
};

inline int popcount(std::uint64_t v) { return __builtin_popcountll(v); }

inline Vec momentum_of(const Discretization& D, std::uint32_t mask) {
  Vec m{0, 0, 0};
  for (int j = 0; j < D.q; ++j)
    if (mask >> j & 1u) m = m + D.channels[j];
  return m;
}

// channel 0 is the leftmost character
inline std::string mask_to_bits(std::uint32_t mask, int q) {
  std::string s(q, '0');
  for (int j = 0; j < q; ++j)
    if (mask >> j & 1u) s[j] = '1';
  return s;
}

inline std::uint32_t bits_to_mask(const std::string& s) {
  std::uint32_t m = 0;
  for (std::size_t j = 0; j < s.size(); ++j) {
    if (s[j] == '1')
      m |= 1u << j;
    else if (s[j] != '0')
      throw InvalidSpec("profile '" + s + "' must contain only 0 and 1");
  }
  return m;
}

inline std::vector<EquivalenceClass> enumerate_classes(const Discretization& D) {
  if (D.q > 20) throw StencilTooLarge(D.name + " has q=" + std::to_string(D.q));
  std::map<std::pair<int, Vec>, EquivalenceClass> cells;
  for (std::uint32_t m = 0; m < (1u << D.q); ++m) {
    auto key = std::make_pair(popcount(m), momentum_of(D, m));
    auto& c = cells[key];
    c.mass = key.first;
    c.momentum = key.second;
    c.members.push_back(m);
  }
  std::vector<EquivalenceClass> out;
  out.reserve(cells.size());
  for (auto& [k, c] : cells) out.push_back(std::move(c));
  return out;
}

inline std::vector<EquivalenceClass> nontrivial_classes(const std::vector<EquivalenceClass>& all) {
  std::vector<EquivalenceClass> out;
  for (const auto& c : all)
    if (c.nontrivial()) out.push_back(c);
  return out;
}

inline std::vector<EquivalenceClass> nontrivial_classes(const Discretization& D) {
  return nontrivial_classes(enumerate_classes(D));
}

inline std::size_t max_class_size(const Discretization& D) {
  std::size_t best = 0;
  for (const auto& c : enumerate_classes(D)) best = std::max(best, c.size());
  return best;
}

}  // namespace qlga
