#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <deque>
#include <map>
#include <string>
#include <vector>

#include "errors.hpp"

namespace qlga {

using Vec = std::array<int, 3>;

inline Vec operator+(const Vec& a, const Vec& b) { return {a[0] + b[0], a[1] + b[1], a[2] + b[2]}; }
inline Vec operator-(const Vec& a, const Vec& b) { return {a[0] - b[0], a[1] - b[1], a[2] - b[2]}; }
inline Vec operator-(const Vec& a) { return {-a[0], -a[1], -a[2]}; }
inline int manhattan(const Vec& a) { return std::abs(a[0]) + std::abs(a[1]) + std::abs(a[2]); }
inline bool is_zero(const Vec& a) { return a[0] == 0 && a[1] == 0 && a[2] == 0; }

struct Discretization {
  std::string name;
  int d = 0;
  int q = 0;
  std::vector<Vec> channels;
  std::vector<int> opposite;  // rest channel maps to itself
  bool has_rest = false;
  int rest = -1;
  double cs = 0.0;  // default speed of sound in lattice units

  bool is_rest(int j) const { return j == rest; }

  // pairs of (positive, negative) channels; positive = lower index
  std::vector<std::array<int, 2>> channel_pairs() const {
    std::vector<std::array<int, 2>> out;
    for (int j = 0; j < q; ++j)
      if (!is_rest(j) && j < opposite[j]) out.push_back({j, opposite[j]});
    return out;
  }
};

inline Discretization build_discretization(const std::string& name) {
  Discretization D;
  D.name = name;
  if (name == "d1q2") {
    D.d = 1;
    D.channels = {{1, 0, 0}, {-1, 0, 0}};
    D.cs = 1.0;
  } else if (name == "d2q4") {
    D.d = 2;
    D.channels = {{1, 0, 0}, {0, 1, 0}, {-1, 0, 0}, {0, -1, 0}};
    D.cs = 1.0 / std::sqrt(2.0);
  } else if (name == "d3q6") {
    D.d = 3;
    D.channels = {{1, 0, 0}, {0, 1, 0}, {0, 0, 1}, {-1, 0, 0}, {0, -1, 0}, {0, 0, -1}};
    D.cs = 1.0 / std::sqrt(3.0);
  } else if (name == "d3q15") {
    D.d = 3;
    D.channels = {{1, 0, 0},   {0, 1, 0},    {0, 0, 1},   {-1, 0, 0},  {0, -1, 0},
                  {0, 0, -1},  {1, 1, 1},    {1, 1, -1},  {1, -1, 1},  {1, -1, -1},
                  {-1, -1, -1}, {-1, -1, 1}, {-1, 1, -1}, {-1, 1, 1},  {0, 0, 0}};
    D.cs = 1.0 / std::sqrt(3.0);
  } else {
    throw UnknownStencil("'" + name + "' (expected d1q2, d2q4, d3q6 or d3q15)");
  }
  D.q = static_cast<int>(D.channels.size());
  D.opposite.assign(D.q, -1);
  for (int j = 0; j < D.q; ++j) {
    if (is_zero(D.channels[j])) {
      D.has_rest = true;
      D.rest = j;
      D.opposite[j] = j;
      continue;
    }
    for (int k = 0; k < D.q; ++k)
      if (D.channels[k] == -D.channels[j]) D.opposite[j] = k;
  }
  return D;
}

struct StencilSite {
  Vec offset;
  int dist;
};

struct StreamingLine {
  int axis = 0;  // index into channel_pairs()
  int positive_channel = 0;
  int negative_channel = 0;
  std::vector<int> sites;  // stencil site indices, ascending along the positive channel
  std::vector<int> ordered_qubits_pos;
  std::vector<int> ordered_qubits_neg;
};

class SpaceTimeStencil {
 public:
  SpaceTimeStencil(Discretization disc, int n_t) : disc_(std::move(disc)), n_t_(n_t) {
    if (n_t < 0) throw InvalidStep("negative step capacity");
    std::map<Vec, int> dist;
    std::deque<Vec> todo{Vec{0, 0, 0}};
    dist[Vec{0, 0, 0}] = 0;
    while (!todo.empty()) {
      Vec v = todo.front();
      todo.pop_front();
      int dv = dist[v];
      if (dv == n_t) continue;
      for (int j = 0; j < disc_.q; ++j) {
        if (disc_.is_rest(j)) continue;
        Vec w = v + disc_.channels[j];
        if (!dist.count(w)) {
          dist[w] = dv + 1;
          todo.push_back(w);
        }
      }
    }
    for (auto& [v, dv] : dist) sites_.push_back({v, dv});
    std::stable_sort(sites_.begin(), sites_.end(), [](const StencilSite& a, const StencilSite& b) {
      if (a.dist != b.dist) return a.dist < b.dist;
      return a.offset < b.offset;
    });
    for (int i = 0; i < static_cast<int>(sites_.size()); ++i) index_[sites_[i].offset] = i;
  }

  const Discretization& disc() const { return disc_; }
  int n_t() const { return n_t_; }
  int q() const { return disc_.q; }
  const std::vector<StencilSite>& sites() const { return sites_; }
  int site_count() const { return static_cast<int>(sites_.size()); }
  int n_velocity_qubits() const { return site_count() * disc_.q; }

  // -1 when the offset is outside the stencil
  int site_index(const Vec& o) const {
    auto it = index_.find(o);
    return it == index_.end() ? -1 : it->second;
  }
  bool contains(const Vec& o) const { return index_.count(o) > 0; }
  int dist(const Vec& o) const { return sites_.at(site_index(o)).dist; }

  // velocity-register-relative index of channel j at stencil site s
  int qubit_index(int site, int j) const { return site * disc_.q + j; }
  int qubit_index(const Vec& o, int j) const {
    int s = site_index(o);
    if (s < 0) throw InvalidSpec("offset outside stencil");
    return qubit_index(s, j);
  }

  std::vector<StreamingLine> streaming_lines() const {
    std::vector<StreamingLine> lines;
    auto pairs = disc_.channel_pairs();
    for (int a = 0; a < static_cast<int>(pairs.size()); ++a) {
      auto [j, jb] = pairs[a];
      const Vec& e = disc_.channels[j];
      for (const auto& s : sites_) {
        if (contains(s.offset - e)) continue;  // not a chain start
        StreamingLine L;
        L.axis = a;
        L.positive_channel = j;
        L.negative_channel = jb;
        for (Vec o = s.offset; contains(o); o = o + e) {
          int si = site_index(o);
          L.sites.push_back(si);
          L.ordered_qubits_pos.push_back(qubit_index(si, j));
          L.ordered_qubits_neg.push_back(qubit_index(si, jb));
        }
        if (L.sites.size() >= 2) lines.push_back(std::move(L));
      }
    }
    return lines;
  }

 private:
  Discretization disc_;
  int n_t_;
  std::vector<StencilSite> sites_;
  std::map<Vec, int> index_;
};

inline long long stencil_site_count(const Discretization& disc, int n_t) {
  if (n_t < 0) throw InvalidStep("negative step capacity");
  long long n = n_t;
  if (disc.name == "d1q2") return 2 * n + 1;
  if (disc.name == "d2q4") return 2 * n * n + 2 * n + 1;
  if (disc.name == "d3q6") return (2 * n + 1) * (2 * n * n + 2 * n + 3) / 3;
  return SpaceTimeStencil(disc, n_t).site_count();
}

inline long long velocity_qubit_count(const Discretization& disc, int n_t) {
  long long n = n_t;
  if (disc.name == "d1q2") return 4 * n + 2;
  if (disc.name == "d2q4") return 8 * n * n + 8 * n + 4;
  if (disc.name == "d3q6") return 8 * n * n * n + 12 * n * n + 16 * n + 6;
  return disc.q * stencil_site_count(disc, n_t);
}

inline int ceil_log2(long long v) {
  int b = 0;
  while ((1LL << b) < v) ++b;
  return b;
}

inline int grid_qubit_count(const std::vector<int>& dims) {
  int n = 0;
  for (int v : dims) {
    if (v < 1) throw InvalidSpec("grid dimension must be >= 1");
    n += ceil_log2(v);
  }
  return n;
}

}  // namespace qlga
