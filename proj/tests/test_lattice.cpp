#include <catch_amalgamated.hpp>

#include "oracles.hpp"

using namespace qlga;

namespace {

std::multiset<std::pair<Vec, int>> segment_cover(const Geometry& G) {
  std::multiset<std::pair<Vec, int>> cov;
  for (auto& a : G.axis_segments())
    for (auto& s : a.sites()) cov.insert({s, a.channel});
  for (auto& dg : G.diagonal_segments())
    for (auto& s : dg.sites())
      for (int j : dg.channels) cov.insert({s, j});
  return cov;
}

std::multiset<std::pair<Vec, int>> reflection_set(const Geometry& G) {
  std::multiset<std::pair<Vec, int>> r;
  for (auto& x : G.reflections()) r.insert({x.site, x.channel});
  return r;
}

}  // namespace

TEST_CASE("register layout and ancilla allocation") {
  auto D = build_discretization("d2q4");
  LatticeSpec plain({8, 8}, D, 1);
  CHECK(plain.n_grid() == 6);
  CHECK(plain.n_velocity() == 20);
  CHECK(plain.n_total() == 26);
  CHECK(plain.n_ancilla() == 0);
  CHECK(plain.grid_qubits(0) == std::vector<int>{0, 1, 2});
  CHECK(plain.grid_qubits(1) == std::vector<int>{3, 4, 5});
  CHECK(plain.vqubit(0, 0) == 6);
  CHECK(plain.vqubit(4, 3) == 6 + 4 * 4 + 3);

  LatticeSpec full({8, 8}, D, 1, {true, true, true});
  CHECK(full.a_l(0) == 26);
  CHECK(full.a_l(1) == 27);
  CHECK(full.a_u(0) == 28);
  CHECK(full.a_u(1) == 29);
  CHECK(full.a_aux().size() == 4);
  CHECK(full.a_d() == 34);
  CHECK(full.a_o() == 35);
  CHECK(full.n_ancilla() == 10);

  LatticeSpec circle({32, 16}, D, 1, {true, true, false});
  CHECK(circle.n_grid() + circle.n_velocity() == 29);
  CHECK(circle.n_ancilla() == 11);
}

TEST_CASE("grids narrower than the stencil are rejected") {
  auto D = build_discretization("d2q4");
  CHECK_THROWS_AS(LatticeSpec({5, 5}, D, 3), InvalidSpec);
  CHECK_NOTHROW(LatticeSpec({5, 5}, D, 2));
  CHECK_THROWS_AS(LatticeSpec({8}, D, 1), InvalidSpec);
  CHECK_THROWS_AS(LatticeSpec({16}, build_discretization("d1q2"), 8), InvalidSpec);
}

TEST_CASE("grid encoding round trips and skips unused codes") {
  auto D = build_discretization("d2q4");
  LatticeSpec L({5, 3}, D, 1);
  REQUIRE(L.n_grid() == 5);
  std::set<long long> ids;
  for (u64 g = 0; g < 32; ++g) {
    auto v = L.grid_site(g);
    u64 x = g & 7, y = g >> 3;
    CHECK(v.has_value() == (x < 5 && y < 3));
    if (v) {
      CHECK(L.grid_value(*v) == g);
      ids.insert(L.site_id(*v));
      CHECK(L.site_of(L.site_id(*v)) == *v);
    }
  }
  CHECK(ids.size() == 15);
  CHECK(L.wrap({-1, 3, 0}) == Vec{4, 0, 0});
}

TEST_CASE("grid controls select exactly one site") {
  auto D = build_discretization("d2q4");
  LatticeSpec L({4, 4}, D, 1);
  Vec target{2, 1, 0};
  auto ctrl = L.grid_controls(target);
  for (u64 g = 0; g < 16; ++g) {
    bool all = true;
    for (auto& c : ctrl) all = all && ((g >> c.qubit & 1u) == (c.polarity ? 1u : 0u));
    CHECK(all == (L.grid_site(g) == target));
  }
}

TEST_CASE("cuboid reflections in one dimension") {
  auto D = build_discretization("d1q2");
  Geometry G({16}, D);
  G.add_cuboid({{2, 0, 0}, {3, 0, 0}});
  CHECK(G.solid_count() == 2);
  auto r = reflection_set(G);
  CHECK(r == std::multiset<std::pair<Vec, int>>{{{2, 0, 0}, 0}, {{3, 0, 0}, 1}});
  CHECK(segment_cover(G) == r);
}

TEST_CASE("staircase circle of radius 3.5 decomposes into 4 walls and 4 diagonals") {
  auto D = build_discretization("d2q4");
  Geometry G({9, 9}, D);
  G.add_circle({{4, 4, 0}, 3.5});
  CHECK(G.axis_segments().size() == 4);
  for (auto& a : G.axis_segments()) CHECK(a.length == 1);
  REQUIRE(G.diagonal_segments().size() == 4);
  for (auto& dg : G.diagonal_segments()) {
    CHECK(dg.length() == 3);
    CHECK(dg.channels.size() == 2);
  }
  std::set<Vec> walls;
  for (auto& a : G.axis_segments()) walls.insert(a.start);
  CHECK(walls == std::set<Vec>{{4, 1, 0}, {4, 7, 0}, {1, 4, 0}, {7, 4, 0}});
  CHECK(segment_cover(G) == reflection_set(G));
}

TEST_CASE("sub-unit circle is a single solid site") {
  auto D = build_discretization("d2q4");
  Geometry G({8, 8}, D);
  G.add_circle({{3, 3, 0}, 0.5});
  CHECK(G.solid_count() == 1);
  CHECK(G.reflections().size() == 4);
  CHECK(G.diagonal_segments().empty());
  CHECK(G.axis_segments().size() == 4);
}

TEST_CASE("reflections are exactly the solid sites with a fluid upstream neighbour") {
  auto D = build_discretization("d2q4");
  std::mt19937_64 rng(12);
  for (int t = 0; t < 20; ++t) {
    Geometry G({16, 16}, D);
    double r = 1.0 + (rng() % 50) / 10.0;
    int cx = 7 + int(rng() % 3), cy = 7 + int(rng() % 3);
    G.add_circle({{cx, cy, 0}, r});
    if (rng() % 2) G.add_cuboid({{0, 0, 0}, {1, 3, 0}});
    std::multiset<std::pair<Vec, int>> expect;
    for (int x = 0; x < 16; ++x)
      for (int y = 0; y < 16; ++y) {
        Vec s{x, y, 0};
        if (!G.solid(s)) continue;
        for (int j = 0; j < 4; ++j)
          if (!G.solid(s - D.channels[j])) expect.insert({s, j});
      }
    INFO("r=" << r);
    CHECK(reflection_set(G) == expect);
    CHECK(segment_cover(G) == expect);
    for (auto& dg : G.diagonal_segments()) {
      CHECK(dg.length() >= 2);
      CHECK(dg.hi[1] - dg.lo[1] == dg.dy * (dg.length() - 1));
    }
  }
}

TEST_CASE("geometry errors") {
  auto D = build_discretization("d2q4");
  Geometry G({8, 8}, D);
  CHECK_THROWS_AS(G.add_cuboid({{0, 0, 0}, {8, 2, 0}}), InvalidGeometry);
  CHECK_THROWS_AS(G.add_cuboid({{3, 0, 0}, {2, 2, 0}}), InvalidGeometry);
  CHECK_THROWS_AS(G.add_circle({{1, 4, 0}, 2.0}), InvalidGeometry);
  CHECK_THROWS_AS(G.add_circle({{4, 4, 0}, 0.0}), InvalidGeometry);
  CHECK(G.empty());
}

TEST_CASE("initial condition validation") {
  auto D = build_discretization("d2q4");
  LatticeSpec L({8, 8}, D, 1);
  Geometry G({8, 8}, D);
  G.add_cuboid({{4, 4, 0}, {5, 5, 0}});
  InitialCondition ok{{{{1, 5, 0}, 0b0011}}, {{{{0, 0, 0}, {1, 7, 0}}, 0b0001}}};
  CHECK_NOTHROW(validate_initial_condition(L, G, ok));
  CHECK_THROWS_AS(validate_initial_condition(L, G, {{{{8, 0, 0}, 1}}, {}}), InvalidInit);
  CHECK_THROWS_AS(validate_initial_condition(L, G, {{{{1, 1, 0}, 0b10000}}, {}}), InvalidInit);
  CHECK_THROWS_AS(validate_initial_condition(L, G, {{{{4, 5, 0}, 1}}, {}}), InvalidInit);
  CHECK_THROWS_AS(validate_initial_condition(L, G, {{{{1, 1, 0}, 1}, {{1, 1, 0}, 2}}, {}}), DuplicateInit);
  CHECK_THROWS_AS(validate_initial_condition(L, G, {{}, {{{{0, 0, 0}, {8, 1, 0}}, 1}}}), InvalidVolume);
  CHECK_THROWS_AS(validate_initial_condition(L, G, {{}, {{{{3, 3, 0}, {4, 4, 0}}, 1}}}), InvalidInit);
}
