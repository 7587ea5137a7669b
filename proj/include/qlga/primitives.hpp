#pragma once

#include <cmath>
#include <numbers>
#include <vector>

#include "circuit.hpp"

namespace qlga {

enum class BoundSense { Lower, Upper };  // Lower flags x >= bound, Upper flags x <= bound

struct ComparatorSpec {
  std::vector<int> reg;  // reg[0] least significant
  long long bound = 0;
  BoundSense sense = BoundSense::Lower;
  int ancilla = -1;
};

// Procedure: qft
inline Circuit qft(const std::vector<int>& r) {
  Circuit c;
  const int n = static_cast<int>(r.size());
  for (int i = n - 1; i >= 0; --i) {
    c.h(r[i]);
    for (int j = i - 1; j >= 0; --j) c.p(r[i], std::numbers::pi / double(1LL << (i - j)), {{r[j], true}});
  }
  for (int i = 0; i < n / 2; ++i) c.swap(r[i], r[n - 1 - i]);
  return c;
}

inline Circuit iqft(const std::vector<int>& r) { return qft(r).inverse(); }

// |x> -> |x + c mod 2^n>, optionally controlled
inline Circuit add_const(const std::vector<int>& r, long long cval, const std::vector<Control>& ctrl = {}) {
  Circuit c;
  const int n = static_cast<int>(r.size());
  if (n == 0) return c;
  const long long mod = 1LL << n;
  long long v = ((cval % mod) + mod) % mod;
  if (v == 0) return c;
  c.append(qft(r));
  for (int j = 0; j < n; ++j) {
    double phi = 2 * std::numbers::pi * std::fmod(double(v) * double(1LL << j) / double(mod), 1.0);
    if (phi != 0.0) c.p(r[j], phi, ctrl);
  }
  c.append(iqft(r));
  return c;
}

// |s>|d> -> |s>|d + sign*s mod 2^m>
inline Circuit add_register(const std::vector<int>& src, const std::vector<int>& dst, int sign = +1) {
  Circuit c;
  const int m = static_cast<int>(dst.size());
  c.append(qft(dst));
  for (std::size_t i = 0; i < src.size(); ++i)
    for (int j = 0; j < m; ++j) {
      long long e = static_cast<long long>(i) + j;
      if (e >= m) continue;
      double phi = sign * 2 * std::numbers::pi * double(1LL << e) / double(1LL << m);
      c.p(dst[j], phi, {{src[i], true}});
    }
  c.append(iqft(dst));
  return c;
}

inline Circuit comparator(const ComparatorSpec& s) {
  const int n = static_cast<int>(s.reg.size());
  for (int q : s.reg)
    if (q == s.ancilla) throw InvalidSpec("ancilla inside comparator register");
  if (s.ancilla < 0) throw InvalidSpec("comparator needs an ancilla");
  if (s.bound < 0 || s.bound >= (1LL << n)) throw InvalidSpec("bound outside register range");
  std::vector<int> ext = s.reg;
  ext.push_back(s.ancilla);
  Circuit c;
  long long b = s.sense == BoundSense::Lower ? s.bound : s.bound + 1;
  c.append(add_const(ext, -b));
  c.append(add_const(s.reg, b));
  if (s.sense == BoundSense::Lower) c.x(s.ancilla);
  return c;
}

inline Circuit mcx(const std::vector<Control>& controls, int target) {
  Circuit c;
  c.x(target, controls);
  return c;
}

inline Circuit cswap(const std::vector<Control>& controls, int a, int b) {
  Circuit c;
  c.x(b, {{a, true}});
  auto cc = controls;
  cc.push_back({b, true});
  c.x(a, cc);
  c.x(b, {{a, true}});
  return c;
}

// CX-count estimate for an X gate with p controls (quadratic in p, 6 for Toffoli)
inline long long mcx_gate_count(int p) {
  if (p <= 0) return 0;
  if (p == 1) return 1;
  return 2LL * p * p - 2LL * p + 2;
}

inline long long mcx_single_qubit_count(int p) {
  if (p <= 0) return 1;
  if (p == 1) return 0;
  return 2LL * p * p + 1;
}

struct GateEstimate {
  long long cx = 0;
  long long single = 0;
};

inline GateEstimate estimate(const GateRecord& g) {
  const int p = static_cast<int>(g.controls.size());
  GateEstimate e;
  long long neg = 0;
  for (auto& c : g.controls)
    if (!c.polarity) neg += 2;
  switch (g.kind) {
    case GateKind::X:
      e = {mcx_gate_count(p), mcx_single_qubit_count(p)};
      break;
    case GateKind::SWAP:
      e = {2 + (p == 0 ? 1 : mcx_gate_count(p + 1)), p == 0 ? 0 : mcx_single_qubit_count(p + 1)};
      break;
    case GateKind::UNITARY: {
      const long long k = static_cast<long long>(g.targets.size()) + p;
      long long four = 1LL << (2 * k);
      e = {(four - 3 * k - 1) / 4 + 1, four};
      break;
    }
    default:
      if (p == 0) e = {0, 1};
      else e = {2 * mcx_gate_count(p), 2 * mcx_single_qubit_count(p) + 3};
  }
  e.single += neg;
  return e;
}

inline GateEstimate estimate(const Circuit& c) {
  GateEstimate t;
  for (auto& g : c.gates()) {
    auto e = estimate(g);
    t.cx += e.cx;
    t.single += e.single;
  }
  return t;
}

inline bool is_power_of_two(long long v) { return v >= 1 && (v & (v - 1)) == 0; }

// diag(DFT(k), I_{N-k})
inline Matrix coll_matrix(int k, int N) {
  if (!is_power_of_two(N)) throw InvalidSize("N=" + std::to_string(N) + " is not a power of two");
  if (k < 1 || k > N) throw InvalidSize("k must satisfy 1 <= k <= N");
  Matrix m = Matrix::identity(N);
  const double s = 1.0 / std::sqrt(double(k));
  for (int r = 0; r < k; ++r)
    for (int c = 0; c < k; ++c) m(r, c) = std::polar(s, -2 * std::numbers::pi * double((long long)r * c % k) / k);
  return m;
}

// cyclic shift |i> -> |i+1 mod k> on the first k states
inline Matrix shift_matrix(int k, int N) {
  if (!is_power_of_two(N)) throw InvalidSize("N=" + std::to_string(N) + " is not a power of two");
  if (k < 1 || k > N) throw InvalidSize("k must satisfy 1 <= k <= N");
  Matrix m(N);
  for (int i = 0; i < N; ++i) m(i < k ? (i + 1) % k : i, i) = 1.0;
  return m;
}

inline double sparsity(const Matrix& m, double eps = 1e-14) {
  std::size_t z = 0;
  for (auto& v : m.a)
    if (std::abs(v) <= eps) ++z;
  return double(z) / double(m.a.size());
}

}  // namespace qlga
