#pragma once
// Independent reference implementations used only by tests.

#include <cmath>
#include <complex>
#include <deque>
#include <map>
#include <numeric>
#include <random>
#include <set>
#include <vector>

#include "qlga/qlga.hpp"

namespace ref {

using cplx = std::complex<double>;
using State = std::vector<cplx>;
using qlga::u64;
using qlga::operator+;
using qlga::operator-;

// gate application by explicit per-basis-state evaluation
inline State apply_naive(const State& in, const qlga::GateRecord& g) {
  State out(in.size(), 0.0);
  auto ctrl_ok = [&](u64 i) {
    for (auto& c : g.controls)
      if (((i >> c.qubit) & 1u) != (c.polarity ? 1u : 0u)) return false;
    return true;
  };
  for (u64 i = 0; i < in.size(); ++i) {
    if (in[i] == cplx(0)) continue;
    if (!ctrl_ok(i)) {
      out[i] += in[i];
      continue;
    }
    switch (g.kind) {
      case qlga::GateKind::X: out[i ^ (u64{1} << g.targets[0])] += in[i]; break;
      case qlga::GateKind::SWAP: {
        u64 a = i >> g.targets[0] & 1u, b = i >> g.targets[1] & 1u;
        u64 j = i & ~(u64{1} << g.targets[0]) & ~(u64{1} << g.targets[1]);
        j |= b << g.targets[0];
        j |= a << g.targets[1];
        out[j] += in[i];
        break;
      }
      case qlga::GateKind::UNITARY: {
        const auto& M = *g.matrix;
        u64 col = 0;
        for (std::size_t k = 0; k < g.targets.size(); ++k) col |= (i >> g.targets[k] & 1u) << k;
        u64 base = i;
        for (int t : g.targets) base &= ~(u64{1} << t);
        for (int row = 0; row < M.dim; ++row) {
          u64 j = base;
          for (std::size_t k = 0; k < g.targets.size(); ++k) j |= (u64(row) >> k & 1u) << g.targets[k];
          out[j] += M(row, static_cast<int>(col)) * in[i];
        }
        break;
      }
      default: {
        cplx m[2][2];
        const double s = 1.0 / std::sqrt(2.0);
        if (g.kind == qlga::GateKind::H) {
          m[0][0] = s; m[0][1] = s; m[1][0] = s; m[1][1] = -s;
        } else if (g.kind == qlga::GateKind::RY) {
          double c = std::cos(g.param / 2), sn = std::sin(g.param / 2);
          m[0][0] = c; m[0][1] = -sn; m[1][0] = sn; m[1][1] = c;
        } else {
          m[0][0] = 1; m[0][1] = 0; m[1][0] = 0; m[1][1] = std::polar(1.0, g.param);
        }
        u64 bit = i >> g.targets[0] & 1u;
        u64 i0 = i & ~(u64{1} << g.targets[0]), i1 = i0 | (u64{1} << g.targets[0]);
        out[i0] += m[0][bit] * in[i];
        out[i1] += m[1][bit] * in[i];
      }
    }
  }
  return out;
}

inline State basis(int n, u64 b) {
  State s(std::size_t{1} << n, 0.0);
  s[b] = 1.0;
  return s;
}

inline State run_naive(State s, const qlga::Circuit& c) {
  for (auto& g : c.gates()) s = apply_naive(s, g);
  return s;
}

inline qlga::Matrix circuit_matrix(const qlga::Circuit& c, int n) {
  qlga::Matrix M(1 << n);
  for (int col = 0; col < (1 << n); ++col) {
    auto s = run_naive(basis(n, static_cast<u64>(col)), c);
    for (int r = 0; r < (1 << n); ++r) M(r, col) = s[r];
  }
  return M;
}

inline State random_state(int n, std::mt19937_64& rng) {
  std::normal_distribution<double> N(0, 1);
  State s(std::size_t{1} << n);
  double norm = 0;
  for (auto& a : s) {
    a = {N(rng), N(rng)};
    norm += std::norm(a);
  }
  for (auto& a : s) a /= std::sqrt(norm);
  return s;
}

inline double distance(const State& a, const std::vector<cplx>& b) {
  double d = 0;
  for (std::size_t i = 0; i < a.size(); ++i) d = std::max(d, std::abs(a[i] - b[i]));
  return d;
}

// breadth-first count of offsets reachable in n_t moves
inline long long bfs_site_count(const qlga::Discretization& D, int n_t) {
  std::set<qlga::Vec> seen{{0, 0, 0}};
  std::vector<qlga::Vec> frontier{{0, 0, 0}};
  for (int s = 0; s < n_t; ++s) {
    std::vector<qlga::Vec> next;
    for (auto& v : frontier)
      for (auto& e : D.channels) {
        auto w = v + e;
        if (seen.insert(w).second) next.push_back(w);
      }
    frontier = next;
  }
  return static_cast<long long>(seen.size());
}

// (x - lo) mod N within [0, len]
inline bool in_interval(int x, int lo, int hi, int N) {
  int a = ((lo % N) + N) % N, b = ((hi % N) + N) % N;
  return a <= b ? (x >= a && x <= b) : (x >= a || x <= b);
}

// Expected velocity occupation of the relevant stencil copies after streaming step tau,
// from the space-time picture: copy o receives channel j from copy o - e_j.
inline std::map<std::pair<int, int>, int> streamed_pattern(const qlga::LatticeSpec& L, u64 basis_in, int tau) {
  std::map<std::pair<int, int>, int> out;
  const auto& st = L.stencil();
  const int r = L.n_t() - tau + 1;
  for (int s = 0; s < st.site_count(); ++s) {
    if (st.sites()[s].dist > r - 1) continue;
    for (int j = 0; j < L.q(); ++j) {
      qlga::Vec from = st.sites()[s].offset - L.disc().channels[j];
      int src = L.disc().is_rest(j) ? s : st.site_index(from);
      out[{s, j}] = static_cast<int>(basis_in >> L.vqubit(src, j) & 1u);
    }
  }
  return out;
}

}  // namespace ref
