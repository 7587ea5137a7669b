#include <catch_amalgamated.hpp>

#include "oracles.hpp"

using namespace qlga;
using Catch::Matchers::WithinAbs;

namespace {

std::uint32_t mask(const char* bits) { return bits_to_mask(bits); }

// explicit Kronecker construction of sum_j n_j on `qubits`, times a grid projector
Matrix explicit_observable(int n, const std::vector<int>& qubits, const std::vector<int>& grid,
                           const std::set<u64>& region) {
  const int N = 1 << n;
  Matrix M(N);
  for (int r = 0; r < N; ++r) M(r, r) = 0.0;
  for (int q : qubits) {
    // single-qubit number operator lifted by explicit tensor products
    Matrix op(1);
    op(0, 0) = 1.0;
    for (int k = n - 1; k >= 0; --k) {
      Matrix f(2);
      if (k == q) {
        f(1, 1) = 1.0;
      } else {
        f(0, 0) = 1.0;
        f(1, 1) = 1.0;
      }
      Matrix next(op.dim * 2);
      for (int a = 0; a < op.dim; ++a)
        for (int b = 0; b < op.dim; ++b)
          for (int c = 0; c < 2; ++c)
            for (int d = 0; d < 2; ++d) next(a * 2 + c, b * 2 + d) = op(a, b) * f(c, d);
      op = next;
    }
    for (int r = 0; r < N; ++r)
      for (int c = 0; c < N; ++c) M(r, c) += op(r, c);
  }
  for (int r = 0; r < N; ++r) {
    u64 g = 0;
    for (std::size_t b = 0; b < grid.size(); ++b) g |= (u64(r) >> grid[b] & 1u) << b;
    if (!region.count(g))
      for (int c = 0; c < N; ++c) M(r, c) = 0.0;
  }
  return M;
}

}  // namespace

TEST_CASE("mass observable is the Hamming weight") {
  CHECK(mass_observable(2) == std::vector<double>{0, 1, 1, 2});
  CHECK(mass_observable(4) == std::vector<double>{0, 1, 1, 2, 1, 2, 2, 3, 1, 2, 2, 3, 2, 3, 3, 4});
  DenseState zero(4);
  Observable o{{0, 1, 2, 3}, mass_observable(4), {}, {}, 1.0};
  CHECK(expectation_diagonal(zero, o) == 0.0);
}

TEST_CASE("two-site d1q2 mass example") {
  auto D = build_discretization("d1q2");
  LatticeSpec L({2}, D, 0);
  REQUIRE(L.n_total() == 3);
  std::vector<cplx> amp(8, 0.0);
  const double s = 1 / std::sqrt(2.0);
  amp[0 | mask("10") << 1] = s;
  amp[1 | mask("11") << 1] = s;
  auto psi = DenseState::from_amplitudes(3, amp);
  auto o = region_observable(L, {{0, 0, 0}}, {0, 0, 0});
  double raw = expectation_diagonal(psi, o);
  CHECK_THAT(raw, WithinAbs(0.5, 1e-12));
  CHECK_THAT(raw * o.scale, WithinAbs(1.0, 1e-12));
  auto both = region_observable(L, {{0, 0, 0}, {1, 0, 0}}, {0, 0, 0});
  CHECK_THAT(expectation_diagonal(psi, both) * both.scale, WithinAbs(1.5, 1e-12));
  CHECK_THROWS_AS(region_observable(L, {}, {0, 0, 0}), InvalidRegion);
}

TEST_CASE("d2q4 local mass is unchanged by collision") {
  auto D = build_discretization("d2q4");
  const double s = 1 / std::sqrt(2.0);
  std::vector<cplx> amp(16, 0.0);
  amp[mask("1000")] = s;
  amp[mask("1010")] = s;
  auto psi = DenseState::from_amplitudes(4, amp);
  Observable o{{0, 1, 2, 3}, mass_observable(4), {}, {}, 1.0};
  CHECK_THAT(expectation_diagonal(psi, o), WithinAbs(1.5, 1e-12));
  run(psi, collision_for_class({0, 1, 2, 3}, nontrivial_classes(D).at(0), CollisionMode::Superposed));
  CHECK_THAT(std::abs(psi.amplitude(mask("1000"))), WithinAbs(s, 1e-12));
  CHECK_THAT(std::abs(psi.amplitude(mask("1010"))), WithinAbs(0.5, 1e-12));
  CHECK_THAT(std::abs(psi.amplitude(mask("0101"))), WithinAbs(0.5, 1e-12));
  CHECK_THAT(expectation_diagonal(psi, o), WithinAbs(1.5, 1e-12));
}

TEST_CASE("region scales for mass, density and pressure") {
  auto D = build_discretization("d2q4");
  LatticeSpec L({8, 8}, D, 1);
  std::vector<Vec> region{{0, 0, 0}, {1, 0, 0}, {2, 0, 0}, {9, 0, 0}};  // (9,0) wraps onto (1,0)
  auto m = region_observable(L, region, {0, 0, 0}, Quantity::Mass);
  auto d = region_observable(L, region, {0, 0, 0}, Quantity::Density);
  auto p = region_observable(L, region, {0, 0, 0}, Quantity::Pressure);
  CHECK(m.projector.size() == 3);
  CHECK_THAT(m.scale, WithinAbs(64.0 / 3, 1e-12));
  CHECK_THAT(d.scale, WithinAbs(64.0 / 12, 1e-12));
  CHECK_THAT(p.scale, WithinAbs(64.0 / 12 * 0.5, 1e-12));
  CHECK_THROWS_AS(region_observable(L, region, {3, 0, 0}), InvalidRegion);

  auto empty = SparseState(L.n_total(), 0);
  run(empty, h_layer(L));
  auto all = region_observable(L, [] {
    std::vector<Vec> v;
    for (int x = 0; x < 8; ++x)
      for (int y = 0; y < 8; ++y) v.push_back({x, y, 0});
    return v;
  }(), {0, 0, 0});
  CHECK(expectation_diagonal(empty, all) == 0.0);
}

TEST_CASE("diagonal weights agree with an explicit matrix") {
  auto D = build_discretization("d1q2");
  LatticeSpec L({4}, D, 1);
  REQUIRE(L.n_total() == 8);
  std::mt19937_64 rng(77);
  for (int trial = 0; trial < 4; ++trial) {
    auto psi = ref::random_state(8, rng);
    auto st = DenseState::from_amplitudes(8, psi);
    std::vector<Vec> region{{1, 0, 0}};
    if (trial % 2) region.push_back({3, 0, 0});
    for (Vec target : {Vec{0, 0, 0}, Vec{1, 0, 0}, Vec{-1, 0, 0}}) {
      auto o = region_observable(L, region, target);
      std::set<u64> g(o.projector.begin(), o.projector.end());
      auto M = explicit_observable(8, o.qubits, o.grid_qubits, g);
      cplx e = 0;
      for (int r = 0; r < 256; ++r)
        for (int c = 0; c < 256; ++c) e += std::conj(psi[r]) * M(r, c) * psi[c];
      CHECK(std::abs(e.imag()) < 1e-12);
      CHECK_THAT(expectation_diagonal(st, o), WithinAbs(e.real(), 1e-12));
    }
  }
}

TEST_CASE("momentum exchange for a single impinging particle") {
  auto D = build_discretization("d2q4");
  LatticeSpec L({8, 8}, D, 1, {true, false, true});
  Geometry G({8, 8}, D);
  G.add_cuboid({{4, 2, 0}, {5, 5, 0}});
  AxisSegment wall{0, {4, 2, 0}, 1, 4};
  Circuit c = pointwise_init(L, G, {{{{3, 4, 0}, mask("1000")}}, {}});
  c.append(streaming_step(L, 1));
  SparseState s(L.n_total(), 0);
  run(s, c);
  auto fx = mem_observable(L, 0, wall);
  CHECK_THAT(expectation_diagonal(s, fx) * fx.scale, WithinAbs(2.0, 1e-12));
  auto fy = mem_observable(L, 1, wall);
  CHECK_THAT(expectation_diagonal(s, fy) * fy.scale, WithinAbs(0.0, 1e-12));

  SparseState q(L.n_total(), 0);
  c.append(qmem_circuit(L, wall));
  run(q, c);
  CHECK_THAT(probability_one(q, L.a_o()), WithinAbs(1.0 / 64, 1e-12));
  q.for_each([&](u64 i, const cplx&) {
    for (int k = 0; k < 2; ++k) {
      CHECK((i >> L.a_l(k) & 1u) == 0);
      CHECK((i >> L.a_u(k) & 1u) == 0);
    }
  });
}

TEST_CASE("QMEM worked wall example") {
  auto D = build_discretization("d2q4");
  LatticeSpec L({6, 6}, D, 1, {true, false, true});
  Geometry G({6, 6}, D);
  G.add_cuboid({{1, 1, 0}, {4, 4, 0}});
  AxisSegment wall{0, {1, 1, 0}, 1, 4};
  InitialCondition ic{{{{0, 1, 0}, mask("1000")},
                       {{0, 2, 0}, mask("1100")},
                       {{0, 3, 0}, mask("1101")},
                       {{0, 4, 0}, mask("0000")}},
                      {}};
  Circuit prep = pointwise_init(L, G, ic);
  prep.append(streaming_step(L, 1));
  SparseState before(L.n_total(), 0);
  run(before, prep);
  Circuit c = prep;
  c.append(qmem_circuit(L, wall));
  SparseState s(L.n_total(), 0);
  run(s, c);
  double valid = 0, wall_weight = 0;
  s.for_each([&](u64 i, const cplx& a) {
    auto x = L.grid_site(i);
    if (!x) return;
    valid += std::norm(a);
    if ((*x)[0] == 0 && (*x)[1] >= 1 && (*x)[1] <= 4) wall_weight += std::norm(a);
  });
  const double p = probability_one(s, L.a_o());
  CHECK_THAT(p / valid, WithinAbs(3.0 / 36, 1e-12));
  CHECK_THAT(p / wall_weight, WithinAbs(3.0 / 4, 1e-12));

  // the force observable agrees: three particles, two momentum units each
  auto fx = mem_observable(L, 0, wall);
  CHECK_THAT(expectation_diagonal(before, fx) / valid, WithinAbs(6.0 / 36, 1e-12));

  // removing the a_o flip leaves the isolation stage self-inverse
  Circuit iso = qmem_circuit(L, wall);
  Circuit stripped(L.n_total());
  for (auto& g : iso.gates())
    if (g.targets[0] != L.a_o()) stripped.add(g);
  SparseState t = before;
  run(t, stripped);
  double diff = 0;
  t.for_each([&](u64 i, const cplx& a) { diff = std::max(diff, std::abs(a - before.amplitude(i))); });
  CHECK(diff < 1e-10);
  CHECK(t.support() == before.support());
}

TEST_CASE("QMEM with no particles never fires") {
  auto D = build_discretization("d2q4");
  LatticeSpec L({6, 6}, D, 1, {true, false, true});
  AxisSegment wall{0, {1, 1, 0}, 1, 4};
  Circuit c = h_layer(L);
  c.append(qmem_circuit(L, wall));
  SparseState s(L.n_total(), 0);
  run(s, c);
  CHECK(probability_one(s, L.a_o()) == 0.0);
  LatticeSpec no_anc({6, 6}, D, 1);
  CHECK_THROWS_AS(qmem_circuit(no_anc, wall), InvalidSpec);
}

TEST_CASE("mass field reports conditional occupation per site") {
  auto D = build_discretization("d2q4");
  LatticeSpec L({6, 6}, D, 1);
  Geometry G({6, 6}, D);
  Circuit c = pointwise_init(L, G, {{{{2, 3, 0}, mask("1101")}, {{5, 0, 0}, mask("0010")}}, {}});
  SparseState s(L.n_total(), 0);
  run(s, c);
  auto f = mass_field(s, L);
  REQUIRE(f.size() == 36);
  for (long long id = 0; id < 36; ++id) {
    Vec v = L.site_of(id);
    double expect = v == Vec{2, 3, 0} ? 3.0 : (v == Vec{5, 0, 0} ? 1.0 : 0.0);
    CHECK_THAT(f[id], WithinAbs(expect, 1e-12));
  }
  auto dist = site_distributions(s, L);
  CHECK_THAT(dist[L.site_id({2, 3, 0})].weight, WithinAbs(1.0 / 64, 1e-12));
  CHECK(dist[L.site_id({2, 3, 0})].patterns.at(mask("1101")) == Catch::Approx(1.0));
}
