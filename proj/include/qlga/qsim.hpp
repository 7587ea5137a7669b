#pragma once

#include <algorithm>
#include <cmath>
#include <complex>
#include <cstdint>
#include <map>
#include <random>
#include <string>
#include <unordered_map>
#include <vector>

#include "circuit.hpp"

namespace qlga {

namespace detail {

struct Mat2 {
  cplx m00, m01, m10, m11;
};

inline Mat2 gate_matrix(const GateRecord& g) {
  const double r = 1.0 / std::sqrt(2.0);
  switch (g.kind) {
    case GateKind::X: return {0, 1, 1, 0};
    case GateKind::H: return {r, r, r, -r};
    case GateKind::RY: {
      double c = std::cos(g.param / 2), s = std::sin(g.param / 2);
      return {c, -s, s, c};
    }
    case GateKind::P: return {1, 0, 0, std::polar(1.0, g.param)};
    default: throw InvalidGate("not a single-qubit gate");
  }
}

struct ControlMask {
  u64 mask = 0, value = 0;
  bool match(u64 i) const { return (i & mask) == value; }
};

inline ControlMask control_mask(const GateRecord& g) {
  ControlMask c;
  for (auto& ct : g.controls) {
    c.mask |= u64{1} << ct.qubit;
    if (ct.polarity) c.value |= u64{1} << ct.qubit;
  }
  return c;
}

// sparse column view of a unitary block
struct ColumnView {
  std::vector<std::vector<std::pair<int, cplx>>> cols;
  bool permutation = true;
};

inline ColumnView columns(const Matrix& m, double eps = 1e-13) {
  ColumnView v;
  v.cols.resize(m.dim);
  for (int c = 0; c < m.dim; ++c) {
    for (int r = 0; r < m.dim; ++r)
      if (std::abs(m(r, c)) > eps) v.cols[c].push_back({r, m(r, c)});
    if (v.cols[c].size() != 1 || std::abs(v.cols[c][0].second - cplx(1.0)) > 1e-12) v.permutation = false;
  }
  return v;
}

inline u64 gather_bits(u64 i, const std::vector<int>& qs) {
  u64 k = 0;
  for (std::size_t b = 0; b < qs.size(); ++b) k |= ((i >> qs[b]) & 1u) << b;
  return k;
}

inline u64 scatter_bits(u64 i, const std::vector<int>& qs, u64 k) {
  for (std::size_t b = 0; b < qs.size(); ++b) {
    u64 bit = u64{1} << qs[b];
    i = (k >> b & 1u) ? (i | bit) : (i & ~bit);
  }
  return i;
}

inline void check_indices(const GateRecord& g, int n) {
  for (int q : g.qubits())
    if (q >= n) throw InvalidGate("qubit " + std::to_string(q) + " outside register of " + std::to_string(n));
}

}  // namespace detail

class DenseState {
 public:
  explicit DenseState(int n = 0, u64 basis = 0) : n_(n), amp_(u64{1} << n, cplx(0)) {
    if (n > 30) throw InvalidSize("dense state limited to 30 qubits");
    amp_[basis] = 1.0;
  }
  static DenseState from_amplitudes(int n, std::vector<cplx> a) {
    DenseState s(n);
    if (a.size() != s.amp_.size()) throw InvalidSize("amplitude vector length");
    s.amp_ = std::move(a);
    return s;
  }

  int n() const { return n_; }
  const std::vector<cplx>& amplitudes() const { return amp_; }
  std::vector<cplx>& amplitudes() { return amp_; }
  cplx amplitude(u64 i) const { return amp_[i]; }

  template <class F>
  void for_each(F&& f) const {
    for (u64 i = 0; i < amp_.size(); ++i)
      if (amp_[i] != cplx(0)) f(i, amp_[i]);
  }

  double norm2() const {
    double s = 0;
    for (auto& a : amp_) s += std::norm(a);
    return s;
  }

  void apply(const GateRecord& g) {
    detail::check_indices(g, n_);
    auto cm = detail::control_mask(g);
    std::vector<int> fixed;
    for (auto& c : g.controls) fixed.push_back(c.qubit);
    for (int t : g.targets) fixed.push_back(t);
    std::sort(fixed.begin(), fixed.end());
    const u64 count = u64{1} << (n_ - static_cast<int>(fixed.size()));
    auto base = [&](u64 k) {
      for (int f : fixed) {
        u64 lo = k & ((u64{1} << f) - 1);
        k = ((k >> f) << (f + 1)) | lo;
      }
      return k | cm.value;
    };
    if (g.kind == GateKind::SWAP) {
      u64 a = u64{1} << g.targets[0], b = u64{1} << g.targets[1];
      for (u64 k = 0; k < count; ++k) {
        u64 i = base(k);
        std::swap(amp_[i | a], amp_[i | b]);
      }
      return;
    }
    if (g.kind == GateKind::UNITARY) {
      auto cv = detail::columns(*g.matrix);
      const int dim = g.matrix->dim;
      std::vector<cplx> in(dim), out(dim);
      std::vector<u64> idx(dim);
      for (u64 k = 0; k < count; ++k) {
        u64 i = base(k);
        for (int c = 0; c < dim; ++c) {
          idx[c] = detail::scatter_bits(i, g.targets, c);
          in[c] = amp_[idx[c]];
          out[c] = 0;
        }
        for (int c = 0; c < dim; ++c)
          if (in[c] != cplx(0))
            for (auto& [r, v] : cv.cols[c]) out[r] += v * in[c];
        for (int c = 0; c < dim; ++c) amp_[idx[c]] = out[c];
      }
      return;
    }
    const u64 tb = u64{1} << g.targets[0];
    if (g.kind == GateKind::X) {
      for (u64 k = 0; k < count; ++k) {
        u64 i = base(k);
        std::swap(amp_[i], amp_[i | tb]);
      }
      return;
    }
    if (g.kind == GateKind::P) {
      cplx ph = std::polar(1.0, g.param);
      for (u64 k = 0; k < count; ++k) amp_[base(k) | tb] *= ph;
      return;
    }
    auto m = detail::gate_matrix(g);
    for (u64 k = 0; k < count; ++k) {
      u64 i = base(k);
      cplx a0 = amp_[i], a1 = amp_[i | tb];
      amp_[i] = m.m00 * a0 + m.m01 * a1;
      amp_[i | tb] = m.m10 * a0 + m.m11 * a1;
    }
  }

 private:
  int n_;
  std::vector<cplx> amp_;
};

class SparseState {
 public:
  explicit SparseState(int n = 0, u64 basis = 0, std::size_t cap = 50'000'000) : n_(n), cap_(cap) {
    if (n > 63) throw InvalidSize("sparse state limited to 63 qubits");
    amp_[basis] = 1.0;
  }

  int n() const { return n_; }
  std::size_t support() const { return amp_.size(); }
  cplx amplitude(u64 i) const {
    auto it = amp_.find(i);
    return it == amp_.end() ? cplx(0) : it->second;
  }
  void set_prune(double eps) { prune_ = eps; }

  template <class F>
  void for_each(F&& f) const {
    for (auto& [i, a] : amp_) f(i, a);
  }

  // ascending basis order, for reproducible iteration
  std::vector<std::pair<u64, cplx>> sorted() const {
    std::vector<std::pair<u64, cplx>> v(amp_.begin(), amp_.end());
    std::sort(v.begin(), v.end(), [](auto& a, auto& b) { return a.first < b.first; });
    return v;
  }

  double norm2() const {
    double s = 0;
    for (auto& [i, a] : amp_) s += std::norm(a);
    return s;
  }

  void apply(const GateRecord& g) {
    detail::check_indices(g, n_);
    auto cm = detail::control_mask(g);
    if (g.kind == GateKind::P) {
      cplx ph = std::polar(1.0, g.param);
      u64 tb = u64{1} << g.targets[0];
      for (auto& [i, a] : amp_)
        if (cm.match(i) && (i & tb)) a *= ph;
      return;
    }
    if (g.kind == GateKind::X || g.kind == GateKind::SWAP) {
      Map next;
      next.reserve(amp_.size());
      for (auto& [i, a] : amp_) {
        u64 j = i;
        if (cm.match(i)) {
          if (g.kind == GateKind::X) {
            j = i ^ (u64{1} << g.targets[0]);
          } else {
            u64 b0 = i >> g.targets[0] & 1u, b1 = i >> g.targets[1] & 1u;
            if (b0 != b1) j = i ^ (u64{1} << g.targets[0]) ^ (u64{1} << g.targets[1]);
          }
        }
        next.emplace(j, a);
      }
      amp_.swap(next);
      return;
    }
    if (g.kind == GateKind::UNITARY) {
      auto cv = detail::columns(*g.matrix);
      Map next;
      next.reserve(amp_.size() * (cv.permutation ? 1 : 2));
      for (auto& [i, a] : amp_) {
        if (!cm.match(i)) {
          next[i] += a;
          continue;
        }
        u64 c = detail::gather_bits(i, g.targets);
        for (auto& [r, v] : cv.cols[c]) next[detail::scatter_bits(i, g.targets, r)] += v * a;
      }
      amp_.swap(next);
      if (!cv.permutation) prune();
      return;
    }
    auto m = detail::gate_matrix(g);
    u64 tb = u64{1} << g.targets[0];
    Map next;
    next.reserve(amp_.size() * 2);
    for (auto& [i, a] : amp_) {
      if (!cm.match(i)) {
        next[i] += a;
        continue;
      }
      bool one = i & tb;
      u64 i0 = i & ~tb, i1 = i | tb;
      cplx c0 = one ? m.m01 : m.m00, c1 = one ? m.m11 : m.m10;
      if (c0 != cplx(0)) next[i0] += c0 * a;
      if (c1 != cplx(0)) next[i1] += c1 * a;
    }
    amp_.swap(next);
    prune();
  }

 private:
  using Map = std::unordered_map<u64, cplx>;
  void prune() {
    for (auto it = amp_.begin(); it != amp_.end();)
      it = std::abs(it->second) < prune_ ? amp_.erase(it) : std::next(it);
    if (amp_.size() > cap_) throw SupportOverflow(std::to_string(amp_.size()) + " nonzero amplitudes");
  }

  int n_;
  std::size_t cap_;
  double prune_ = 1e-13;
  Map amp_;
};

template <class State>
State& apply(State& s, const GateRecord& g) {
  s.apply(g);
  return s;
}

template <class State>
State& run(State& s, const Circuit& c) {
  for (auto& g : c.gates()) s.apply(g);
  return s;
}

// Merge runs of consecutive gates acting on at most `max_qubits` distinct qubits into
// single UNITARY blocks. Gates touching more qubits pass through unchanged.
inline Circuit fuse(const Circuit& c, int max_qubits = 6) {
  Circuit out(c.n());
  std::vector<GateRecord> block;
  std::vector<int> qs;
  auto flush = [&] {
    if (block.size() == 1) {
      out.add(block[0]);
    } else if (block.size() > 1) {
      std::sort(qs.begin(), qs.end());
      const int k = static_cast<int>(qs.size());
      std::map<int, int> local;
      for (int i = 0; i < k; ++i) local[qs[i]] = i;
      Matrix M(1 << k);
      for (int col = 0; col < (1 << k); ++col) {
        DenseState s(k, static_cast<u64>(col));
        for (auto g : block) {
          for (auto& t : g.targets) t = local[t];
          for (auto& ct : g.controls) ct.qubit = local[ct.qubit];
          s.apply(g);
        }
        for (int r = 0; r < (1 << k); ++r) {
          cplx v = s.amplitude(static_cast<u64>(r));
          if (std::abs(v.real()) < 1e-14) v.real(0);
          if (std::abs(v.imag()) < 1e-14) v.imag(0);
          M(r, col) = v;
        }
      }
      out.unitary(qs, std::move(M));
    }
    block.clear();
    qs.clear();
  };
  for (auto& g : c.gates()) {
    auto gq = g.qubits();
    if (static_cast<int>(gq.size()) > max_qubits) {
      flush();
      out.add(g);
      continue;
    }
    std::vector<int> u = qs;
    for (int q : gq)
      if (std::find(u.begin(), u.end(), q) == u.end()) u.push_back(q);
    if (static_cast<int>(u.size()) > max_qubits) {
      flush();
      u = gq;
    }
    qs = u;
    block.push_back(g);
  }
  flush();
  return out;
}

// Diagonal observable: velocity weight function of the basis index, restricted to grid
// indices in a projector set (empty projector = no restriction).
template <class State, class W, class P>
double expectation(const State& s, W&& weight, P&& in_projector) {
  double e = 0;
  s.for_each([&](u64 i, const cplx& a) {
    if (in_projector(i)) e += weight(i) * std::norm(a);
  });
  return e;
}

template <class State>
std::map<u64, std::size_t> sample(const State& s, std::size_t shots, u64 seed) {
  std::vector<std::pair<u64, double>> p;
  s.for_each([&](u64 i, const cplx& a) { p.push_back({i, std::norm(a)}); });
  std::sort(p.begin(), p.end());
  std::vector<double> cum(p.size());
  double acc = 0;
  for (std::size_t i = 0; i < p.size(); ++i) cum[i] = acc += p[i].second;
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> U(0.0, acc);
  std::map<u64, std::size_t> hist;
  for (std::size_t k = 0; k < shots; ++k) {
    double u = U(rng);
    std::size_t j = std::upper_bound(cum.begin(), cum.end(), u) - cum.begin();
    if (j >= p.size()) j = p.size() - 1;
    ++hist[p[j].first];
  }
  return hist;
}

}  // namespace qlga
