#pragma once

#include <algorithm>
#include <complex>
#include <cstdint>
#include <map>
#include <memory>
#include <sstream>
#include <string>
#include <vector>

#include "errors.hpp"

namespace qlga {

using cplx = std::complex<double>;
using u64 = std::uint64_t;

// Square matrix, row-major, dimension 2^k
struct Matrix {
  int dim = 0;
  std::vector<cplx> a;
  Matrix() = default;
  explicit Matrix(int n) : dim(n), a(static_cast<std::size_t>(n) * n) {}
  static Matrix identity(int n) {
    Matrix m(n);
    for (int i = 0; i < n; ++i) m(i, i) = 1.0;
    return m;
  }
  cplx& operator()(int r, int c) { return a[static_cast<std::size_t>(r) * dim + c]; }
  const cplx& operator()(int r, int c) const { return a[static_cast<std::size_t>(r) * dim + c]; }
  Matrix adjoint() const {
    Matrix m(dim);
    for (int r = 0; r < dim; ++r)
      for (int c = 0; c < dim; ++c) m(c, r) = std::conj((*this)(r, c));
    return m;
  }
  Matrix operator*(const Matrix& o) const {
    Matrix m(dim);
    for (int r = 0; r < dim; ++r)
      for (int k = 0; k < dim; ++k) {
        cplx v = (*this)(r, k);
        if (v == cplx(0)) continue;
        for (int c = 0; c < dim; ++c) m(r, c) += v * o(k, c);
      }
    return m;
  }
  // max |M M^dagger - I|
  double unitarity_error() const {
    double err = 0;
    for (int r = 0; r < dim; ++r)
      for (int c = 0; c < dim; ++c) {
        cplx s = 0;
        for (int k = 0; k < dim; ++k) s += (*this)(r, k) * std::conj((*this)(c, k));
        err = std::max(err, std::abs(s - cplx(r == c ? 1.0 : 0.0)));
      }
    return err;
  }
};

enum class GateKind { X, H, RY, P, SWAP, UNITARY };

inline const char* kind_name(GateKind k) {
  switch (k) {
    case GateKind::X: return "X";
    case GateKind::H: return "H";
    case GateKind::RY: return "RY";
    case GateKind::P: return "P";
    case GateKind::SWAP: return "SWAP";
    case GateKind::UNITARY: return "UNITARY";
  }
  return "?";
}

struct Control {
  int qubit;
  bool polarity;  // true: fires on |1>
  bool operator==(const Control& o) const { return qubit == o.qubit && polarity == o.polarity; }
};

struct GateRecord {
  GateKind kind = GateKind::X;
  std::vector<int> targets;
  std::vector<Control> controls;
  double param = 0.0;
  std::shared_ptr<const Matrix> matrix;  // UNITARY only; index bit i = targets[i]
  std::string tag;

  std::vector<int> qubits() const {
    std::vector<int> q = targets;
    for (auto& c : controls) q.push_back(c.qubit);
    return q;
  }
};

inline std::vector<Control> ctrl1(const std::vector<int>& qs) {
  std::vector<Control> c;
  for (int q : qs) c.push_back({q, true});
  return c;
}

// controls matching the low bits of `value` on `qs` (qs[0] = least significant)
inline std::vector<Control> ctrl_value(const std::vector<int>& qs, unsigned long long value) {
  std::vector<Control> c;
  for (std::size_t i = 0; i < qs.size(); ++i) c.push_back({qs[i], static_cast<bool>(value >> i & 1ull)});
  return c;
}

class Circuit {
 public:
  Circuit() = default;
  explicit Circuit(int n) : n_(n) {}

  int n() const { return n_; }
  void resize(int n) { n_ = std::max(n_, n); }
  const std::vector<GateRecord>& gates() const { return gates_; }
  std::size_t size() const { return gates_.size(); }
  bool empty() const { return gates_.empty(); }

  Circuit& tag(const std::string& t) {
    for (auto& g : gates_)
      if (g.tag.empty()) g.tag = t;
    return *this;
  }

  void add(GateRecord g) {
    validate(g);
    gates_.push_back(std::move(g));
  }

  void x(int t, std::vector<Control> c = {}) { add({GateKind::X, {t}, std::move(c), 0.0, nullptr, {}}); }
  void h(int t, std::vector<Control> c = {}) { add({GateKind::H, {t}, std::move(c), 0.0, nullptr, {}}); }
  void ry(int t, double th, std::vector<Control> c = {}) { add({GateKind::RY, {t}, std::move(c), th, nullptr, {}}); }
  void p(int t, double phi, std::vector<Control> c = {}) { add({GateKind::P, {t}, std::move(c), phi, nullptr, {}}); }
  void swap(int a, int b, std::vector<Control> c = {}) { add({GateKind::SWAP, {a, b}, std::move(c), 0.0, nullptr, {}}); }
  void unitary(std::vector<int> t, Matrix m, std::vector<Control> c = {}) {
    add({GateKind::UNITARY, std::move(t), std::move(c), 0.0, std::make_shared<const Matrix>(std::move(m)), {}});
  }

  void append(const Circuit& o) {
    resize(o.n_);
    gates_.insert(gates_.end(), o.gates_.begin(), o.gates_.end());
  }

  Circuit inverse() const {
    Circuit r(n_);
    for (auto it = gates_.rbegin(); it != gates_.rend(); ++it) {
      GateRecord g = *it;
      if (g.kind == GateKind::RY || g.kind == GateKind::P) g.param = -g.param;
      if (g.kind == GateKind::UNITARY) g.matrix = std::make_shared<const Matrix>(g.matrix->adjoint());
      r.gates_.push_back(std::move(g));
    }
    return r;
  }

  std::map<std::string, std::size_t> count_by_tag() const {
    std::map<std::string, std::size_t> m;
    for (auto& g : gates_) ++m[g.tag];
    return m;
  }

  std::string dump() const {
    std::ostringstream os;
    for (auto& g : gates_) {
      os << kind_name(g.kind) << " t=";
      for (std::size_t i = 0; i < g.targets.size(); ++i) os << (i ? "," : "") << g.targets[i];
      os << " c=";
      for (std::size_t i = 0; i < g.controls.size(); ++i)
        os << (i ? "," : "") << (g.controls[i].polarity ? "" : "!") << g.controls[i].qubit;
      if (g.kind == GateKind::RY || g.kind == GateKind::P) os << " p=" << g.param;
      if (g.kind == GateKind::UNITARY) os << " dim=" << g.matrix->dim;
      os << " [" << g.tag << "]\n";
    }
    return os.str();
  }

 private:
  void validate(const GateRecord& g) {
    std::size_t nt = g.kind == GateKind::SWAP ? 2 : (g.kind == GateKind::UNITARY ? g.targets.size() : 1);
    if (g.targets.size() != nt || g.targets.empty()) throw InvalidGate("wrong target count");
    if (g.kind == GateKind::UNITARY) {
      if (!g.matrix || g.matrix->dim != (1 << g.targets.size())) throw InvalidGate("matrix size mismatch");
      if (g.targets.size() > 8) throw InvalidGate("unitary arity above 8");
    }
    auto qs = g.qubits();
    for (int q : qs)
      if (q < 0) throw InvalidGate("negative qubit index");
    std::sort(qs.begin(), qs.end());
    if (std::adjacent_find(qs.begin(), qs.end()) != qs.end()) throw InvalidGate("repeated qubit in gate");
    n_ = std::max(n_, qs.back() + 1);
  }

  int n_ = 0;
  std::vector<GateRecord> gates_;
};

}  // namespace qlga
