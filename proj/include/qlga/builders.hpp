#pragma once

#include <algorithm>
#include <map>
#include <set>
#include <vector>

#include "equiv.hpp"
#include "lattice.hpp"
#include "primitives.hpp"

namespace qlga {

enum class CollisionMode { Superposed, OneToOne };

inline Circuit h_layer(const LatticeSpec& L) {
  Circuit c(L.n_total());
  for (int q : L.all_grid_qubits()) c.h(q);
  c.tag("h_layer");
  return c;
}

// Procedure: pointwise_init
// Grid copy x = site - o receives the profile on its stencil site o.
inline Circuit pointwise_init(const LatticeSpec& L, const Geometry& G, const InitialCondition& ic,
                              bool with_h_layer = true) {
  validate_initial_condition(L, G, ic);
  Circuit c(L.n_total());
  if (with_h_layer) c.append(h_layer(L));
  const auto& st = L.stencil();
  for (auto& p : ic.points) {
    for (int s = 0; s < st.site_count(); ++s) {
      Vec x = L.wrap(p.site - st.sites()[s].offset);
      if (!G.empty() && G.solid(x)) continue;
      auto ctrl = L.grid_controls(x);
      for (int j = 0; j < L.q(); ++j)
        if (p.profile >> j & 1u) c.x(L.vqubit(s, j), ctrl);
    }
  }
  c.tag("pointwise_init");
  return c;
}

namespace detail {

struct IntervalFlag {
  Circuit compute;
  // alternative control sets; the union of their supports is the flagged interval
  std::vector<std::vector<Control>> groups;
};

// flag lo..hi (inclusive, taken mod N) on grid dimension k with a_l/a_u of that dimension
inline IntervalFlag flag_interval(const LatticeSpec& L, int k, int lo, int hi) {
  const int N = L.dims()[k];
  int a = ((lo % N) + N) % N, b = ((hi % N) + N) % N;
  IntervalFlag f;
  f.compute.append(comparator({L.grid_qubits(k), a, BoundSense::Lower, L.a_l(k)}));
  f.compute.append(comparator({L.grid_qubits(k), b, BoundSense::Upper, L.a_u(k)}));
  if (a <= b)
    f.groups.push_back({{L.a_l(k), true}, {L.a_u(k), true}});
  else
    f.groups = {{{L.a_l(k), true}}, {{L.a_u(k), true}}};
  return f;
}

inline std::vector<std::vector<Control>> product(const std::vector<std::vector<std::vector<Control>>>& sets) {
  std::vector<std::vector<Control>> out{{}};
  for (auto& s : sets) {
    std::vector<std::vector<Control>> next;
    for (auto& partial : out)
      for (auto& g : s) {
        auto v = partial;
        v.insert(v.end(), g.begin(), g.end());
        next.push_back(v);
      }
    out = std::move(next);
  }
  return out;
}

inline void require_comparators(const LatticeSpec& L) {
  if (!L.needs().comparators) throw InvalidSpec("lattice was built without comparator ancillae");
}

}  // namespace detail

// Procedure: volumetric_init
inline Circuit volumetric_init(const LatticeSpec& L, const Geometry& G, const InitialCondition& ic,
                               bool with_h_layer = true) {
  validate_initial_condition(L, G, ic);
  Circuit c(L.n_total());
  if (with_h_layer) c.append(h_layer(L));
  if (!ic.volumes.empty()) detail::require_comparators(L);
  const auto& st = L.stencil();
  for (auto& v : ic.volumes) {
    for (int s = 0; s < st.site_count(); ++s) {
      const Vec& o = st.sites()[s].offset;
      Circuit compute;
      std::vector<std::vector<std::vector<Control>>> sets;
      for (int k = 0; k < L.d(); ++k) {
        auto f = detail::flag_interval(L, k, v.box.lo[k] - o[k], v.box.hi[k] - o[k]);
        compute.append(f.compute);
        sets.push_back(f.groups);
      }
      c.append(compute);
      for (auto& g : detail::product(sets))
        for (int j = 0; j < L.q(); ++j)
          if (v.profile >> j & 1u) c.x(L.vqubit(s, j), g);
      c.append(compute.inverse());
    }
  }
  c.tag("volumetric_init");
  return c;
}

inline Circuit initial_conditions(const LatticeSpec& L, const Geometry& G, const InitialCondition& ic) {
  Circuit c = pointwise_init(L, G, {ic.points, {}}, true);
  if (!ic.volumes.empty()) c.append(volumetric_init(L, G, {{}, ic.volumes}, false));
  validate_initial_condition(L, G, ic);
  return c;
}

inline void check_step(const LatticeSpec& L, int tau) {
  if (tau < 1 || tau > L.n_t())
    throw InvalidStep("step " + std::to_string(tau) + " outside 1.." + std::to_string(L.n_t()));
}

// positions (in line order) still relevant at step tau
inline std::vector<int> relevant_prefix(const LatticeSpec& L, const std::vector<int>& sites, int r) {
  std::vector<int> idx;
  for (std::size_t k = 0; k < sites.size(); ++k)
    if (L.stencil().sites()[sites[k]].dist <= r) idx.push_back(static_cast<int>(k));
  return idx;
}

namespace detail {

inline void reverse_swaps(Circuit& c, const std::vector<int>& qs, int from, int to) {
  for (int a = from, b = to; a < b; ++a, --b) c.swap(qs[a], qs[b]);
}

}  // namespace detail

// Procedure: streaming_step
// Every line moves one site along its channel: two layers of disjoint swaps per direction.
inline Circuit streaming_step(const LatticeSpec& L, int tau) {
  check_step(L, tau);
  const int r = L.n_t() - tau + 1;
  Circuit c(L.n_total());
  for (auto& line : L.stencil().streaming_lines()) {
    auto idx = relevant_prefix(L, line.sites, r);
    if (idx.size() < 2) continue;
    for (std::size_t k = 1; k < idx.size(); ++k)
      if (idx[k] != idx[k - 1] + 1) throw InvalidSpec("non-contiguous streaming line");
    std::vector<int> pos, neg;
    for (int k : idx) {
      pos.push_back(L.vqubit(line.sites[k], line.positive_channel));
      neg.push_back(L.vqubit(line.sites[k], line.negative_channel));
    }
    const int n = static_cast<int>(pos.size());
    detail::reverse_swaps(c, pos, 0, n - 1);
    detail::reverse_swaps(c, pos, 1, n - 1);
    detail::reverse_swaps(c, neg, 0, n - 1);
    detail::reverse_swaps(c, neg, 0, n - 2);
  }
  c.tag("streaming");
  return c;
}

struct BouncePair {
  Vec source;  // holds channel j on the solid side
  Vec target;  // source - e_j, receives the opposite channel
};

// stencil pairs of channel j present at step tau
inline std::vector<BouncePair> bounceback_pairs(const LatticeSpec& L, int j, int tau) {
  check_step(L, tau);
  const int r = L.n_t() - tau + 1;
  const auto& st = L.stencil();
  std::vector<BouncePair> out;
  for (auto& s : st.sites()) {
    if (s.dist > r) continue;
    Vec t = s.offset - L.disc().channels[j];
    if (st.contains(t) && st.dist(t) <= r) out.push_back({s.offset, t});
  }
  return out;
}

inline long long bounceback_pair_count(const LatticeSpec& L, int j) {
  long long n = 0;
  for (int tau = 1; tau <= L.n_t(); ++tau) n += static_cast<long long>(bounceback_pairs(L, j, tau).size());
  return n;
}

inline long long bounceback_closed_form(int n_t) { return 2LL * n_t * n_t + 2LL * n_t - 2; }

inline void emit_bounce_swap(Circuit& c, const LatticeSpec& L, const BouncePair& p, int j,
                             const std::vector<Control>& ctrl) {
  int a = L.vqubit(p.source, j);
  int b = L.vqubit(p.target, L.disc().opposite[j]);
  c.append(cswap(ctrl, a, b));
}

// Procedure: pointwise_bounceback
inline Circuit pointwise_bounceback(const LatticeSpec& L, const Geometry& G, int tau) {
  check_step(L, tau);
  Circuit c(L.n_total());
  if (G.empty()) return c;
  for (auto& rf : G.reflections())
    for (auto& p : bounceback_pairs(L, rf.channel, tau)) {
      Vec x = L.wrap(rf.site - p.source);
      if (G.solid(x)) continue;
      emit_bounce_swap(c, L, p, rf.channel, L.grid_controls(x));
    }
  c.tag("pointwise_bounceback");
  return c;
}

struct DiagonalFlag {
  Circuit compute;  // offsets, comparators, a_aux arithmetic
  Circuit mark;     // multi-controlled X onto a_d
  Circuit flag() const {
    Circuit c = compute;
    c.append(mark);
    return c;
  }
  Circuit unflag() const {
    Circuit c = mark;
    c.append(compute.inverse());
    return c;
  }
};

// Procedure: diagonal_segment_flag
// a_d is set exactly on the sites lo + k*(1, dy), k = 0..hi.x-lo.x.
inline DiagonalFlag diagonal_segment_flag(const LatticeSpec& L, Vec lo, Vec hi) {
  if (L.d() != 2) throw InvalidSegment("diagonal segments need a two-dimensional grid");
  if (!L.needs().diagonal || !L.needs().comparators) throw InvalidSpec("lattice lacks diagonal ancillae");
  if (lo[0] > hi[0]) std::swap(lo, hi);
  const int len = hi[0] - lo[0];
  if (std::abs(hi[1] - lo[1]) != len) throw InvalidSegment("increment is not (1, +-1)");
  for (int k = 0; k < 2; ++k)
    for (int v : {lo[k], hi[k]})
      if (v < 0 || v >= L.dims()[k]) throw InvalidSegment("segment leaves the grid");
  const int dy = hi[1] >= lo[1] ? 1 : -1;
  const int ymin = std::min(lo[1], hi[1]);
  const auto& X = L.grid_qubits(0);
  const auto& Y = L.grid_qubits(1);
  DiagonalFlag f;
  Circuit& c = f.compute;
  c.append(add_const(X, -lo[0]));
  c.append(add_const(Y, -ymin));
  c.append(comparator({X, len, BoundSense::Upper, L.a_u(0)}));
  c.append(comparator({Y, len, BoundSense::Upper, L.a_u(1)}));
  c.append(add_register(X, L.a_aux(), +1));
  if (dy > 0) {
    c.append(add_register(Y, L.a_aux(), -1));
  } else {
    c.append(add_register(Y, L.a_aux(), +1));
    c.append(add_const(L.a_aux(), -len));
  }
  for (int q : L.a_aux()) c.x(q);
  auto ctrl = ctrl1(L.a_aux());
  ctrl.push_back({L.a_u(0), true});
  ctrl.push_back({L.a_u(1), true});
  f.mark.x(L.a_d(), ctrl);
  f.compute.tag("diagonal_flag");
  f.mark.tag("diagonal_flag");
  return f;
}

// Procedure: volumetric_bounceback
// Axis segments are isolated with comparators on the transverse dimension and X-conjugated
// controls on the pinned ones; diagonal segments use the diagonal flag.
inline Circuit volumetric_bounceback(const LatticeSpec& L, const Geometry& G, int tau) {
  check_step(L, tau);
  Circuit c(L.n_total());
  if (G.empty()) return c;
  detail::require_comparators(L);
  auto all_solid = [&](const std::vector<Vec>& xs) {
    for (auto& x : xs)
      if (!G.solid(x)) return false;
    return true;
  };
  for (auto& seg : G.axis_segments()) {
    auto sites = seg.sites();
    for (auto& p : bounceback_pairs(L, seg.channel, tau)) {
      std::vector<Vec> xs;
      for (auto& s : sites) xs.push_back(L.wrap(s - p.source));
      if (all_solid(xs)) continue;
      if (seg.along < 0) {
        emit_bounce_swap(c, L, p, seg.channel, L.grid_controls(xs[0]));
        continue;
      }
      std::vector<Control> pins;
      for (int k = 0; k < L.d(); ++k)
        if (k != seg.along) {
          auto pk = L.grid_controls_dim(k, xs[0][k]);
          pins.insert(pins.end(), pk.begin(), pk.end());
        }
      int lo = seg.start[seg.along] - p.source[seg.along];
      auto f = detail::flag_interval(L, seg.along, lo, lo + seg.length - 1);
      c.append(f.compute);
      for (auto& g : f.groups) {
        auto ctrl = pins;
        ctrl.insert(ctrl.end(), g.begin(), g.end());
        emit_bounce_swap(c, L, p, seg.channel, ctrl);
      }
      c.append(f.compute.inverse());
    }
  }
  for (auto& seg : G.diagonal_segments()) {
    auto sites = seg.sites();
    for (int j : seg.channels)
      for (auto& p : bounceback_pairs(L, j, tau)) {
        Vec lo = seg.lo - p.source, hi = seg.hi - p.source;
        std::vector<Vec> xs;
        for (auto& s : sites) xs.push_back(L.wrap(s - p.source));
        if (all_solid(xs)) continue;
        bool inside = true;
        for (int k = 0; k < 2; ++k)
          for (int v : {lo[k], hi[k]}) inside = inside && v >= 0 && v < L.dims()[k];
        if (!inside) {
          for (auto& x : xs)
            if (!G.solid(x)) emit_bounce_swap(c, L, p, j, L.grid_controls(x));
          continue;
        }
        auto f = diagonal_segment_flag(L, lo, hi);
        c.append(f.flag());
        emit_bounce_swap(c, L, p, j, {{L.a_d(), true}});
        c.append(f.unflag());
      }
  }
  c.tag("volumetric_bounceback");
  return c;
}

inline Circuit boundary_step(const LatticeSpec& L, const Geometry& G, int tau, BoundaryMode mode) {
  return mode == BoundaryMode::Pointwise ? pointwise_bounceback(L, G, tau) : volumetric_bounceback(L, G, tau);
}

namespace detail {

// transposition of two basis patterns of `sub` along a Gray-code path
inline void transposition(Circuit& c, const std::vector<int>& sub, std::uint32_t a, std::uint32_t b) {
  if (a == b) return;
  const int q = static_cast<int>(sub.size());
  std::vector<int> diff;
  for (int j = 0; j < q; ++j)
    if ((a ^ b) >> j & 1u) diff.push_back(j);
  std::vector<std::pair<int, std::uint32_t>> flips;  // (bit, state before flip)
  std::uint32_t g = a;
  for (int bit : diff) {
    flips.push_back({bit, g});
    g ^= 1u << bit;
  }
  auto emit = [&](const std::pair<int, std::uint32_t>& f) {
    std::vector<Control> ctrl;
    for (int j = 0; j < q; ++j)
      if (j != f.first) ctrl.push_back({sub[j], static_cast<bool>(f.second >> j & 1u)});
    c.x(sub[f.first], ctrl);
  };
  for (std::size_t i = 0; i + 1 < flips.size(); ++i) emit(flips[i]);
  emit(flips.back());
  for (std::size_t i = flips.size() - 1; i-- > 0;) emit(flips[i]);
}

}  // namespace detail

inline int class_register_width(std::size_t k) { return ceil_log2(static_cast<long long>(k)); }

// pattern that member rank k is permuted onto: k on the leading r channels (channel 0 most
// significant), all trailing channels occupied
inline std::uint32_t class_target_pattern(int k, int r, int q) {
  std::uint32_t m = 0;
  for (int c = 0; c < r; ++c)
    if (k >> (r - 1 - c) & 1) m |= 1u << c;
  for (int c = r; c < q; ++c) m |= 1u << c;
  return m;
}

// Procedure: class_permutation
inline Circuit class_permutation(const std::vector<int>& sub, const EquivalenceClass& E) {
  const int q = static_cast<int>(sub.size());
  const int r = class_register_width(E.size());
  std::map<std::uint32_t, std::uint32_t> sigma;
  std::set<std::uint32_t> members(E.members.begin(), E.members.end()), targets;
  for (std::size_t i = 0; i < E.size(); ++i) {
    auto t = class_target_pattern(static_cast<int>(i), r, q);
    sigma[E.members[i]] = t;
    targets.insert(t);
  }
  std::vector<std::uint32_t> free_src, free_dst;
  for (auto t : targets)
    if (!members.count(t)) free_src.push_back(t);
  for (auto m : members)
    if (!targets.count(m)) free_dst.push_back(m);
  for (std::size_t i = 0; i < free_src.size(); ++i) sigma[free_src[i]] = free_dst[i];
  Circuit c;
  std::set<std::uint32_t> seen;
  for (auto& [start, img] : sigma) {
    if (seen.count(start)) continue;
    std::vector<std::uint32_t> cyc{start};
    seen.insert(start);
    for (auto x = sigma[start]; x != start; x = sigma[x]) {
      cyc.push_back(x);
      seen.insert(x);
    }
    for (std::size_t i = cyc.size() - 1; i-- > 0;) detail::transposition(c, sub, cyc[i], cyc[i + 1]);
  }
  return c;
}

// Procedure: collision_for_class (on an explicit q-qubit subregister)
inline Circuit collision_for_class(const std::vector<int>& sub, const EquivalenceClass& E, CollisionMode mode) {
  if (E.size() < 2) throw InvalidSpec("trivial class cannot be redistributed");
  const int q = static_cast<int>(sub.size());
  const int r = class_register_width(E.size());
  const int N = 1 << r;
  Circuit perm = class_permutation(sub, E);
  Circuit c;
  c.append(perm);
  std::vector<int> lead;
  for (int ch = r - 1; ch >= 0; --ch) lead.push_back(sub[ch]);
  std::vector<Control> trail;
  for (int ch = r; ch < q; ++ch) trail.push_back({sub[ch], true});
  int k = static_cast<int>(E.size());
  c.unitary(lead, mode == CollisionMode::Superposed ? coll_matrix(k, N) : shift_matrix(k, N), trail);
  c.append(perm.inverse());
  return c;
}

inline Circuit collision_for_class(const LatticeSpec& L, const EquivalenceClass& E, CollisionMode mode,
                                   int site = 0) {
  Circuit c(L.n_total());
  c.append(collision_for_class(L.site_qubits(site), E, mode));
  c.tag("collision");
  return c;
}

// Procedure: full_collision
inline Circuit full_collision(const LatticeSpec& L, int tau, CollisionMode mode,
                              const std::vector<EquivalenceClass>* classes = nullptr) {
  check_step(L, tau);
  std::vector<EquivalenceClass> own;
  if (!classes) {
    own = nontrivial_classes(L.disc());
    classes = &own;
  }
  Circuit c(L.n_total());
  const int r = L.n_t() - tau;
  std::vector<Circuit> per_class;
  for (auto& E : *classes) per_class.push_back(collision_for_class(L.site_qubits(0), E, mode));
  const int q0 = L.vqubit(0, 0);
  for (int s = 0; s < L.stencil().site_count(); ++s) {
    if (L.stencil().sites()[s].dist > r) continue;
    const int shift = L.vqubit(s, 0) - q0;
    for (auto& pc : per_class)
      for (auto g : pc.gates()) {
        for (auto& t : g.targets) t += shift;
        for (auto& ct : g.controls) ct.qubit += shift;
        c.add(std::move(g));
      }
  }
  c.tag("collision");
  return c;
}

struct StepOptions {
  BoundaryMode boundary = BoundaryMode::Pointwise;
  CollisionMode collision = CollisionMode::Superposed;
  bool collide = true;
};

inline Circuit qlga_step(const LatticeSpec& L, const Geometry& G, int tau, const StepOptions& opt,
                         const std::vector<EquivalenceClass>* classes = nullptr) {
  Circuit c(L.n_total());
  c.append(streaming_step(L, tau));
  c.append(boundary_step(L, G, tau, opt.boundary));
  if (opt.collide) c.append(full_collision(L, tau, opt.collision, classes));
  return c;
}

}  // namespace qlga
