#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include "circuit.hpp"
#include "equiv.hpp"
#include "stencil.hpp"

namespace qlga {

struct AncillaNeeds {
  bool comparators = false;  // a_l / a_u per dimension
  bool diagonal = false;     // a_aux register and a_d
  bool qmem = false;         // a_o
};

class LatticeSpec {
 public:
  LatticeSpec(std::vector<int> dims, const Discretization& disc, int n_t, AncillaNeeds needs = {})
      : dims_(std::move(dims)), stencil_(disc, n_t), needs_(needs) {
    if (static_cast<int>(dims_.size()) != disc.d)
      throw InvalidSpec("grid has " + std::to_string(dims_.size()) + " dimensions, stencil " + disc.name +
                        " needs " + std::to_string(disc.d));
    int off = 0;
    for (int d = 0; d < disc.d; ++d) {
      if (dims_[d] < 1) throw InvalidSpec("grid dimension must be >= 1");
      if (2 * n_t + 1 > dims_[d])
        throw InvalidSpec("stencil of " + std::to_string(n_t) + " steps spans " + std::to_string(2 * n_t + 1) +
                          " sites, more than grid dimension " + std::to_string(d) + " (" +
                          std::to_string(dims_[d]) + ")");
      int b = ceil_log2(dims_[d]);
      nbits_.push_back(b);
      std::vector<int> qs;
      for (int i = 0; i < b; ++i) qs.push_back(off + i);
      grid_qubits_.push_back(qs);
      off += b;
    }
    n_grid_ = off;
    vbase_ = off;
    int next = vbase_ + stencil_.n_velocity_qubits();
    if (needs_.comparators) {
      for (int d = 0; d < disc.d; ++d) a_l_.push_back(next++);
      for (int d = 0; d < disc.d; ++d) a_u_.push_back(next++);
    }
    if (needs_.diagonal) {
      int m = *std::max_element(nbits_.begin(), nbits_.end()) + 1;
      for (int i = 0; i < m; ++i) a_aux_.push_back(next++);
      a_d_ = next++;
    }
    if (needs_.qmem) a_o_ = next++;
    n_total_ = next;
  }

  const std::vector<int>& dims() const { return dims_; }
  const Discretization& disc() const { return stencil_.disc(); }
  const SpaceTimeStencil& stencil() const { return stencil_; }
  int d() const { return disc().d; }
  int q() const { return disc().q; }
  int n_t() const { return stencil_.n_t(); }
  int n_grid() const { return n_grid_; }
  int n_velocity() const { return stencil_.n_velocity_qubits(); }
  int n_total() const { return n_total_; }
  int n_ancilla() const { return n_total_ - n_grid_ - n_velocity(); }
  const AncillaNeeds& needs() const { return needs_; }

  const std::vector<int>& grid_qubits(int dim) const { return grid_qubits_.at(dim); }
  std::vector<int> all_grid_qubits() const {
    std::vector<int> v;
    for (auto& g : grid_qubits_) v.insert(v.end(), g.begin(), g.end());
    return v;
  }
  int a_l(int dim) const { return a_l_.at(dim); }
  int a_u(int dim) const { return a_u_.at(dim); }
  const std::vector<int>& a_aux() const { return a_aux_; }
  int a_d() const { return a_d_; }
  int a_o() const { return a_o_; }

  int vqubit(int site, int j) const { return vbase_ + stencil_.qubit_index(site, j); }
  int vqubit(const Vec& o, int j) const { return vbase_ + stencil_.qubit_index(o, j); }
  std::vector<int> site_qubits(int site) const {
    std::vector<int> v;
    for (int j = 0; j < q(); ++j) v.push_back(vqubit(site, j));
    return v;
  }

  long long n_sites() const {
    long long n = 1;
    for (int v : dims_) n *= v;
    return n;
  }
  Vec wrap(const Vec& v) const {
    Vec w{0, 0, 0};
    for (int k = 0; k < d(); ++k) w[k] = ((v[k] % dims_[k]) + dims_[k]) % dims_[k];
    return w;
  }
  long long site_id(const Vec& v) const {
    long long id = 0, mul = 1;
    for (int k = 0; k < d(); ++k) {
      id += v[k] * mul;
      mul *= dims_[k];
    }
    return id;
  }
  Vec site_of(long long id) const {
    Vec v{0, 0, 0};
    for (int k = 0; k < d(); ++k) {
      v[k] = static_cast<int>(id % dims_[k]);
      id /= dims_[k];
    }
    return v;
  }

  u64 grid_value(const Vec& site) const {
    u64 g = 0;
    for (int k = 0; k < d(); ++k)
      if (nbits_[k] > 0) g |= static_cast<u64>(site[k]) << grid_qubits_[k].front();
    return g;
  }
  // decode the grid part of a basis index; nullopt for unused grid codes (x >= N)
  std::optional<Vec> grid_site(u64 basis) const {
    Vec v{0, 0, 0};
    for (int k = 0; k < d(); ++k) {
      if (nbits_[k] == 0) continue;
      u64 val = basis >> grid_qubits_[k].front() & ((u64{1} << nbits_[k]) - 1);
      if (val >= static_cast<u64>(dims_[k])) return std::nullopt;
      v[k] = static_cast<int>(val);
    }
    return v;
  }
  std::vector<Control> grid_controls(const Vec& site) const {
    std::vector<Control> c;
    for (int k = 0; k < d(); ++k) {
      auto cc = ctrl_value(grid_qubits_[k], static_cast<unsigned long long>(site[k]));
      c.insert(c.end(), cc.begin(), cc.end());
    }
    return c;
  }
  std::vector<Control> grid_controls_dim(int k, int value) const {
    return ctrl_value(grid_qubits_[k], static_cast<unsigned long long>(value));
  }
  // velocity pattern (q bits) of stencil site `site` in a basis index
  std::uint32_t site_pattern(u64 basis, int site) const {
    return static_cast<std::uint32_t>(basis >> (vbase_ + site * q()) & ((u64{1} << q()) - 1));
  }

 private:
  std::vector<int> dims_;
  SpaceTimeStencil stencil_;
  AncillaNeeds needs_;
  std::vector<int> nbits_;
  std::vector<std::vector<int>> grid_qubits_;
  int n_grid_ = 0, vbase_ = 0, n_total_ = 0;
  std::vector<int> a_l_, a_u_, a_aux_;
  int a_d_ = -1, a_o_ = -1;
};

struct Cuboid {
  Vec lo{0, 0, 0}, hi{0, 0, 0};
};

struct Circle {
  Vec center{0, 0, 0};
  double radius = 0;
};

struct Reflection {
  Vec site;  // solid perimeter site
  int channel;  // channel whose particles arrive at `site` from site - e_j
};

struct AxisSegment {
  int channel = 0;
  Vec start{0, 0, 0};
  int along = -1;  // transverse dimension the segment extends in, -1 for a single site
  int length = 1;
  std::vector<Vec> sites() const {
    std::vector<Vec> v;
    for (int k = 0; k < length; ++k) {
      Vec s = start;
      if (along >= 0) s[along] += k;
      v.push_back(s);
    }
    return v;
  }
};

struct DiagonalSegment {
  Vec lo{0, 0, 0};  // endpoint with the smaller x
  Vec hi{0, 0, 0};
  int dy = 1;  // increment (+1, dy)
  std::vector<int> channels;
  int length() const { return hi[0] - lo[0] + 1; }
  std::vector<Vec> sites() const {
    std::vector<Vec> v;
    for (int k = 0; k < length(); ++k) v.push_back({lo[0] + k, lo[1] + dy * k, 0});
    return v;
  }
};

enum class BoundaryMode { Pointwise, Volumetric };

class Geometry {
 public:
  Geometry() = default;
  Geometry(std::vector<int> dims, const Discretization& disc) : dims_(std::move(dims)), disc_(disc) {
    long long n = 1;
    for (int v : dims_) n *= v;
    solid_.assign(static_cast<std::size_t>(n), 0);
  }

  void add_cuboid(const Cuboid& c) {
    for (int k = 0; k < disc_.d; ++k)
      if (c.lo[k] < 0 || c.hi[k] >= dims_[k] || c.lo[k] > c.hi[k])
        throw InvalidGeometry("cuboid outside grid in dimension " + std::to_string(k));
    cuboids_.push_back(c);
    for_each_site([&](const Vec& v) {
      bool in = true;
      for (int k = 0; k < disc_.d; ++k) in = in && v[k] >= c.lo[k] && v[k] <= c.hi[k];
      if (in) solid_[id(v)] = 1;
    });
    derive();
  }

  void add_circle(const Circle& c) {
    if (c.radius <= 0) throw InvalidGeometry("radius must be positive");
    for (int k = 0; k < disc_.d; ++k)
      if (c.center[k] - c.radius < 0 || c.center[k] + c.radius > dims_[k] - 1)
        throw InvalidGeometry("circle leaves the grid in dimension " + std::to_string(k));
    circles_.push_back(c);
    for_each_site([&](const Vec& v) {
      double r2 = 0;
      for (int k = 0; k < disc_.d; ++k) r2 += double(v[k] - c.center[k]) * double(v[k] - c.center[k]);
      if (r2 <= c.radius * c.radius) solid_[id(v)] = 1;
    });
    derive();
  }

  bool empty() const { return cuboids_.empty() && circles_.empty(); }
  const std::vector<int>& dims() const { return dims_; }
  const std::vector<Cuboid>& cuboids() const { return cuboids_; }
  const std::vector<Circle>& circles() const { return circles_; }
  bool solid(const Vec& v) const { return solid_[id(wrap(v))] != 0; }
  const std::vector<Reflection>& reflections() const { return reflections_; }
  const std::vector<AxisSegment>& axis_segments() const { return axis_; }
  const std::vector<DiagonalSegment>& diagonal_segments() const { return diag_; }
  std::size_t solid_count() const { return std::count(solid_.begin(), solid_.end(), 1); }

  Vec wrap(const Vec& v) const {
    Vec w{0, 0, 0};
    for (int k = 0; k < disc_.d; ++k) w[k] = ((v[k] % dims_[k]) + dims_[k]) % dims_[k];
    return w;
  }

 private:
  long long id(const Vec& v) const {
    long long i = 0, mul = 1;
    for (int k = 0; k < disc_.d; ++k) {
      i += v[k] * mul;
      mul *= dims_[k];
    }
    return i;
  }
  template <class F>
  void for_each_site(F&& f) const {
    for (std::size_t i = 0; i < solid_.size(); ++i) {
      Vec v{0, 0, 0};
      long long r = static_cast<long long>(i);
      for (int k = 0; k < disc_.d; ++k) {
        v[k] = static_cast<int>(r % dims_[k]);
        r /= dims_[k];
      }
      f(v);
    }
  }

  void derive() {
    reflections_.clear();
    axis_.clear();
    diag_.clear();
    std::map<Vec, std::vector<int>> J;
    for_each_site([&](const Vec& s) {
      if (!solid(s)) return;
      for (int j = 0; j < disc_.q; ++j) {
        if (disc_.is_rest(j)) continue;
        if (!solid(s - disc_.channels[j])) {
          reflections_.push_back({s, j});
          J[s].push_back(j);
        }
      }
    });
    std::set<std::pair<Vec, int>> covered;
    if (disc_.name == "d2q4") {
      // maximal unit-diagonal runs of sites sharing one x-channel and one y-channel
      std::set<Vec> used;
      for (auto& [s, js] : J) {
        if (used.count(s) || !two_axis(js)) continue;
        int sx = disc_.channels[js[0]][0] + disc_.channels[js[1]][0];
        int sy = disc_.channels[js[0]][1] + disc_.channels[js[1]][1];
        int dy = -sx * sy;
        Vec a = s;
        while (true) {
          Vec p{a[0] - 1, a[1] - dy, 0};
          if (p[0] < 0 || p[1] < 0 || p[1] >= dims_[1] || !J.count(p) || J[p] != js || used.count(p)) break;
          a = p;
        }
        Vec b = a;
        while (true) {
          Vec n{b[0] + 1, b[1] + dy, 0};
          if (n[0] >= dims_[0] || n[1] < 0 || n[1] >= dims_[1] || !J.count(n) || J[n] != js) break;
          b = n;
        }
        if (b[0] == a[0]) continue;
        DiagonalSegment seg{a, b, dy, js};
        for (auto& v : seg.sites()) {
          used.insert(v);
          for (int j : js) covered.insert({v, j});
        }
        diag_.push_back(seg);
      }
    }
    // axis segments: runs along the first dimension transverse to the channel
    for (int j = 0; j < disc_.q; ++j) {
      if (disc_.is_rest(j)) continue;
      const Vec& e = disc_.channels[j];
      int along = -1;
      int nonzero = 0;
      for (int k = 0; k < disc_.d; ++k) nonzero += e[k] != 0;
      if (nonzero == 1)
        for (int k = 0; k < disc_.d; ++k)
          if (e[k] == 0) {
            along = k;
            break;
          }
      std::vector<Vec> pts;
      for (auto& r : reflections_)
        if (r.channel == j && !covered.count({r.site, j})) pts.push_back(r.site);
      std::sort(pts.begin(), pts.end(), [&](const Vec& a, const Vec& b) {
        if (along < 0) return a < b;
        Vec ka = a, kb = b;
        std::swap(ka[along], ka[2]);
        std::swap(kb[along], kb[2]);
        return ka < kb;
      });
      for (std::size_t i = 0; i < pts.size();) {
        AxisSegment seg{j, pts[i], along, 1};
        std::size_t k = i + 1;
        while (along >= 0 && k < pts.size()) {
          Vec expect = pts[k - 1];
          expect[along] += 1;
          if (pts[k] != expect) break;
          ++seg.length;
          ++k;
        }
        axis_.push_back(seg);
        i = k;
      }
    }
  }

  bool two_axis(const std::vector<int>& js) const {
    if (js.size() != 2) return false;
    const Vec &a = disc_.channels[js[0]], &b = disc_.channels[js[1]];
    return (a[0] != 0 && a[1] == 0 && b[0] == 0 && b[1] != 0) || (b[0] != 0 && b[1] == 0 && a[0] == 0 && a[1] != 0);
  }

  std::vector<int> dims_;
  Discretization disc_;
  std::vector<char> solid_;
  std::vector<Cuboid> cuboids_;
  std::vector<Circle> circles_;
  std::vector<Reflection> reflections_;
  std::vector<AxisSegment> axis_;
  std::vector<DiagonalSegment> diag_;
};

struct PointInit {
  Vec site;
  std::uint32_t profile;
};

struct VolumeInit {
  Cuboid box;
  std::uint32_t profile;
};

struct InitialCondition {
  std::vector<PointInit> points;
  std::vector<VolumeInit> volumes;
  bool empty() const { return points.empty() && volumes.empty(); }
};

inline void validate_initial_condition(const LatticeSpec& L, const Geometry& G, const InitialCondition& ic) {
  std::set<Vec> seen;
  const std::uint32_t full = (1u << L.q()) - 1;
  for (auto& p : ic.points) {
    for (int k = 0; k < L.d(); ++k)
      if (p.site[k] < 0 || p.site[k] >= L.dims()[k]) throw InvalidInit("site outside grid");
    if ((p.profile & ~full) != 0) throw InvalidInit("profile wider than q bits");
    if (!G.empty() && G.solid(p.site)) throw InvalidInit("site inside a solid");
    if (!seen.insert(p.site).second) throw DuplicateInit("site listed twice");
  }
  for (auto& v : ic.volumes) {
    for (int k = 0; k < L.d(); ++k)
      if (v.box.lo[k] < 0 || v.box.hi[k] >= L.dims()[k] || v.box.lo[k] > v.box.hi[k])
        throw InvalidVolume("cuboid exceeds grid in dimension " + std::to_string(k));
    if ((v.profile & ~full) != 0) throw InvalidInit("profile wider than q bits");
    if (!G.empty())
      for (long long id = 0; id < L.n_sites(); ++id) {
        Vec s = L.site_of(id);
        bool in = true;
        for (int k = 0; k < L.d(); ++k) in = in && s[k] >= v.box.lo[k] && s[k] <= v.box.hi[k];
        if (in && G.solid(s)) throw InvalidInit("volume overlaps a solid");
      }
  }
}

}  // namespace qlga
