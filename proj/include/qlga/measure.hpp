#pragma once

#include <cmath>
#include <functional>
#include <map>
#include <set>
#include <vector>

#include "builders.hpp"
#include "qsim.hpp"

namespace qlga {

enum class Quantity { Mass, Density, Pressure };

struct Observable {
  std::vector<int> qubits;        // velocity subregister, qubits[0] = channel 0
  std::vector<double> weights;    // indexed by subregister pattern (bit j = qubits[j])
  std::vector<u64> projector;     // grid basis values; empty = every grid state
  std::vector<int> grid_qubits;   // qubits that the projector refers to
  double scale = 1.0;

  double weight(u64 basis) const {
    u64 pat = 0;
    for (std::size_t j = 0; j < qubits.size(); ++j) pat |= (basis >> qubits[j] & 1u) << j;
    return weights[pat];
  }
  bool projects(u64 basis) const {
    if (projector.empty()) return true;
    u64 g = 0;
    for (std::size_t b = 0; b < grid_qubits.size(); ++b) g |= (basis >> grid_qubits[b] & 1u) << b;
    return std::binary_search(projector.begin(), projector.end(), g);
  }
};

// Procedure: mass_observable
inline std::vector<double> mass_observable(int q) {
  std::vector<double> w(std::size_t{1} << q);
  for (std::size_t p = 0; p < w.size(); ++p) w[p] = popcount(p);
  return w;
}

template <class State>
double expectation_diagonal(const State& s, const Observable& o) {
  return expectation(s, [&](u64 i) { return o.weight(i); }, [&](u64 i) { return o.projects(i); });
}

inline Observable region_observable(const LatticeSpec& L, const std::vector<Vec>& region, const Vec& target,
                                    Quantity kind = Quantity::Mass) {
  if (region.empty()) throw InvalidRegion("empty region");
  Observable o;
  int site = L.stencil().site_index(target);
  if (site < 0) throw InvalidRegion("target offset outside stencil");
  o.qubits = L.site_qubits(site);
  o.weights = mass_observable(L.q());
  o.grid_qubits = L.all_grid_qubits();
  std::set<u64> g;
  for (auto& v : region) g.insert(L.grid_value(L.wrap(v)));
  o.projector.assign(g.begin(), g.end());
  double s = std::ldexp(1.0, L.n_grid()) / double(o.projector.size());
  if (kind != Quantity::Mass) s /= L.q();
  if (kind == Quantity::Pressure) s *= L.disc().cs * L.disc().cs;
  o.scale = s;
  return o;
}

// Procedure: mem_observable
// Force weight sum_j 2 n_j e_j(k) on the solid-side copy of every fluid site facing the wall.
inline Observable mem_observable(const LatticeSpec& L, int k, const AxisSegment& wall) {
  const Vec& e = L.disc().channels[wall.channel];
  Observable o;
  o.qubits = L.site_qubits(L.stencil().site_index(e));
  o.weights.assign(std::size_t{1} << L.q(), 0.0);
  for (std::size_t p = 0; p < o.weights.size(); ++p)
    for (int j = 0; j < L.q(); ++j)
      if (p >> j & 1u) o.weights[p] += 2.0 * L.disc().channels[j][k];
  o.grid_qubits = L.all_grid_qubits();
  std::set<u64> g;
  for (auto& s : wall.sites()) g.insert(L.grid_value(L.wrap(s - e)));
  o.projector.assign(g.begin(), g.end());
  o.scale = std::ldexp(1.0, L.n_grid());
  return o;
}

// Procedure: qmem_circuit
// Isolates the fluid sites facing `wall` and flips a_o where the impinging channel is occupied.
inline Circuit qmem_circuit(const LatticeSpec& L, const AxisSegment& wall) {
  if (!L.needs().qmem) throw InvalidSpec("lattice lacks the a_o ancilla");
  const int j = wall.channel;
  const Vec& e = L.disc().channels[j];
  const int v = L.vqubit(e, j);
  Circuit c(L.n_total());
  auto sites = wall.sites();
  if (wall.along < 0) {
    auto ctrl = L.grid_controls(L.wrap(sites[0] - e));
    ctrl.push_back({v, true});
    c.x(L.a_o(), ctrl);
    c.tag("qmem");
    return c;
  }
  detail::require_comparators(L);
  Vec x0 = L.wrap(sites[0] - e);
  std::vector<Control> pins;
  for (int k = 0; k < L.d(); ++k)
    if (k != wall.along) {
      auto pk = L.grid_controls_dim(k, x0[k]);
      pins.insert(pins.end(), pk.begin(), pk.end());
    }
  int lo = wall.start[wall.along] - e[wall.along];
  auto f = detail::flag_interval(L, wall.along, lo, lo + wall.length - 1);
  c.append(f.compute);
  for (auto& g : f.groups) {
    auto ctrl = pins;
    ctrl.insert(ctrl.end(), g.begin(), g.end());
    ctrl.push_back({v, true});
    c.x(L.a_o(), ctrl);
  }
  c.append(f.compute.inverse());
  c.tag("qmem");
  return c;
}

template <class State>
double probability_one(const State& s, int qubit) {
  double p = 0;
  s.for_each([&](u64 i, const cplx& a) {
    if (i >> qubit & 1u) p += std::norm(a);
  });
  return p;
}

// Per-site conditional distribution of the velocity pattern at stencil site `site`,
// normalized by the represented weight of each grid state.
struct SiteDistribution {
  double weight = 0;  // total probability of the grid state
  std::map<std::uint32_t, double> patterns;
};

template <class State>
std::vector<SiteDistribution> site_distributions(const State& s, const LatticeSpec& L, int site = 0) {
  std::vector<SiteDistribution> out(static_cast<std::size_t>(L.n_sites()));
  s.for_each([&](u64 i, const cplx& a) {
    auto v = L.grid_site(i);
    if (!v) return;
    auto& d = out[L.site_id(*v)];
    double p = std::norm(a);
    d.weight += p;
    d.patterns[L.site_pattern(i, site)] += p;
  });
  for (auto& d : out)
    if (d.weight > 0)
      for (auto& [k, p] : d.patterns) p /= d.weight;
  return out;
}

// expected particle count per site (conditional on the grid state)
template <class State>
std::vector<double> mass_field(const State& s, const LatticeSpec& L, int site = 0) {
  std::vector<double> f;
  for (auto& d : site_distributions(s, L, site)) {
    double m = 0;
    for (auto& [pat, p] : d.patterns) m += p * popcount(pat);
    f.push_back(m);
  }
  return f;
}

}  // namespace qlga
