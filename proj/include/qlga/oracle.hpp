#pragma once

#include <cmath>
#include <cstdint>
#include <map>
#include <string>
#include <vector>

#include "builders.hpp"
#include "equiv.hpp"
#include "lattice.hpp"

namespace qlga {

struct LatticeField {
  std::vector<int> dims;
  std::vector<std::uint32_t> occ;  // site id = x + Nx*(y + Ny*z)

  LatticeField() = default;
  explicit LatticeField(std::vector<int> d) : dims(std::move(d)) {
    long long n = 1;
    for (int v : dims) n *= v;
    occ.assign(static_cast<std::size_t>(n), 0);
  }
  long long id(const Vec& v) const {
    long long i = 0, mul = 1;
    for (std::size_t k = 0; k < dims.size(); ++k) {
      int c = ((v[k] % dims[k]) + dims[k]) % dims[k];
      i += c * mul;
      mul *= dims[k];
    }
    return i;
  }
  Vec site(long long i) const {
    Vec v{0, 0, 0};
    for (std::size_t k = 0; k < dims.size(); ++k) {
      v[k] = static_cast<int>(i % dims[k]);
      i /= dims[k];
    }
    return v;
  }
  std::uint32_t& at(const Vec& v) { return occ[id(v)]; }
  std::uint32_t at(const Vec& v) const { return occ[id(v)]; }
  // canonical key: occupancy bytes in site order
  std::string key() const {
    std::string s;
    s.reserve(occ.size() * 2);
    for (auto m : occ) {
      s.push_back(static_cast<char>(m & 0xff));
      s.push_back(static_cast<char>(m >> 8 & 0xff));
    }
    return s;
  }
  std::vector<double> mass() const {
    std::vector<double> m;
    for (auto o : occ) m.push_back(popcount(o));
    return m;
  }
  long long total_mass() const {
    long long t = 0;
    for (auto o : occ) t += popcount(o);
    return t;
  }
  bool operator==(const LatticeField& o) const { return occ == o.occ && dims == o.dims; }
};

inline LatticeField field_from_initial(const std::vector<int>& dims, const InitialCondition& ic) {
  LatticeField f(dims);
  for (auto& p : ic.points) f.at(p.site) |= p.profile;
  for (auto& v : ic.volumes)
    for (long long i = 0; i < static_cast<long long>(f.occ.size()); ++i) {
      Vec s = f.site(i);
      bool in = true;
      for (std::size_t k = 0; k < dims.size(); ++k) in = in && s[k] >= v.box.lo[k] && s[k] <= v.box.hi[k];
      if (in) f.occ[i] |= v.profile;
    }
  return f;
}

inline LatticeField classical_stream(const LatticeField& f, const Discretization& D) {
  LatticeField g(f.dims);
  for (long long i = 0; i < static_cast<long long>(f.occ.size()); ++i) {
    Vec s = f.site(i);
    for (int j = 0; j < D.q; ++j)
      if (D.is_rest(j) ? (f.occ[i] >> j & 1u) : (f.at(s - D.channels[j]) >> j & 1u)) g.occ[i] |= 1u << j;
  }
  return g;
}

inline void classical_bounce(LatticeField& f, const Geometry& G, const Discretization& D) {
  for (auto& r : G.reflections()) {
    std::uint32_t& s = f.at(r.site);
    if (s >> r.channel & 1u) {
      s &= ~(1u << r.channel);
      f.at(r.site - D.channels[r.channel]) |= 1u << D.opposite[r.channel];
    }
  }
}

struct ClassIndex {
  std::map<std::uint32_t, const EquivalenceClass*> of;
  std::vector<EquivalenceClass> classes;
  explicit ClassIndex(const Discretization& D) : classes(nontrivial_classes(D)) {
    for (auto& c : classes)
      for (auto m : c.members) of[m] = &c;
  }
  ClassIndex(const ClassIndex&) = delete;
};

inline void classical_collide_one_to_one(LatticeField& f, const Geometry& G, const ClassIndex& C) {
  for (long long i = 0; i < static_cast<long long>(f.occ.size()); ++i) {
    if (!G.empty() && G.solid(f.site(i))) continue;
    auto it = C.of.find(f.occ[i]);
    if (it == C.of.end()) continue;
    const auto& E = *it->second;
    f.occ[i] = E.members[(E.rank_of(f.occ[i]) + 1) % E.size()];
  }
}

// deterministic step: stream, bounce back, one-to-one collision (or none)
inline LatticeField classical_step(const LatticeField& f, const Geometry& G, const Discretization& D,
                                   const ClassIndex* C) {
  LatticeField g = classical_stream(f, D);
  if (!G.empty()) classical_bounce(g, G, D);
  if (C) classical_collide_one_to_one(g, G, *C);
  return g;
}

struct FieldDistribution {
  std::map<std::string, std::pair<LatticeField, double>> support;
  double total() const {
    double t = 0;
    for (auto& [k, v] : support) t += v.second;
    return t;
  }
  std::vector<double> expected_mass() const {
    std::vector<double> m;
    for (auto& [k, v] : support) {
      auto f = v.first.mass();
      if (m.empty()) m.assign(f.size(), 0.0);
      for (std::size_t i = 0; i < f.size(); ++i) m[i] += v.second * f[i];
    }
    return m;
  }
};

// superposed collision as a stochastic map: each colliding site takes every member of its class
// with equal probability
inline FieldDistribution classical_step(const FieldDistribution& in, const Geometry& G, const Discretization& D,
                                        const ClassIndex& C, std::size_t cap = 1'000'000) {
  FieldDistribution out;
  for (auto& [key, fp] : in.support) {
    LatticeField g = classical_stream(fp.first, D);
    if (!G.empty()) classical_bounce(g, G, D);
    std::vector<std::pair<LatticeField, double>> branches{{g, fp.second}};
    for (long long i = 0; i < static_cast<long long>(g.occ.size()); ++i) {
      if (!G.empty() && G.solid(g.site(i))) continue;
      auto it = C.of.find(g.occ[i]);
      if (it == C.of.end()) continue;
      const auto& E = *it->second;
      std::vector<std::pair<LatticeField, double>> next;
      for (auto& [b, p] : branches)
        for (auto m : E.members) {
          LatticeField h = b;
          h.occ[i] = m;
          next.push_back({std::move(h), p / double(E.size())});
        }
      branches = std::move(next);
      if (branches.size() > cap) throw SupportOverflow("distribution support above cap");
    }
    for (auto& [b, p] : branches) {
      auto& slot = out.support[b.key()];
      slot.first = b;
      slot.second += p;
    }
    if (out.support.size() > cap) throw SupportOverflow("distribution support above cap");
  }
  return out;
}

struct CompareReport {
  double linf = 0;
  bool exact = false;
};

inline CompareReport compare_fields(const std::vector<double>& a, const std::vector<double>& b, double tol = 1e-9) {
  if (a.size() != b.size()) throw InvalidSpec("field sizes differ");
  CompareReport r;
  for (std::size_t i = 0; i < a.size(); ++i) r.linf = std::max(r.linf, std::abs(a[i] - b[i]));
  r.exact = r.linf <= tol;
  return r;
}

}  // namespace qlga
