#include <catch_amalgamated.hpp>

#include "oracles.hpp"

using namespace qlga;

TEST_CASE("d2q4 has one nontrivial class {1010, 0101}") {
  auto D = build_discretization("d2q4");
  auto nt = nontrivial_classes(D);
  REQUIRE(nt.size() == 1);
  CHECK(nt[0].mass == 2);
  CHECK(nt[0].momentum == Vec{0, 0, 0});
  std::set<std::string> bits;
  for (auto m : nt[0].members) bits.insert(mask_to_bits(m, 4));
  CHECK(bits == std::set<std::string>{"1010", "0101"});
  CHECK(max_class_size(D) == 2);
}

TEST_CASE("d3q6 nontrivial classes") {
  auto D = build_discretization("d3q6");
  auto nt = nontrivial_classes(D);
  CHECK(nt.size() == 8);
  for (auto& c : nt) {
    CHECK(c.mass >= 2);
    CHECK(c.mass <= 4);
  }
  auto it = std::find_if(nt.begin(), nt.end(), [](auto& c) { return c.mass == 2 && is_zero(c.momentum); });
  REQUIRE(it != nt.end());
  std::set<std::string> bits;
  for (auto m : it->members) bits.insert(mask_to_bits(m, 6));
  CHECK(bits == std::set<std::string>{"100100", "010010", "001001"});
}

TEST_CASE("d3q15 class counts") {
  auto D = build_discretization("d3q15");
  auto all = enumerate_classes(D);
  CHECK(nontrivial_classes(all).size() == 2832);
  CHECK(max_class_size(D) == 73);
  // the 73-member classes have zero momentum
  for (auto& c : all)
    if (c.size() == 73) CHECK(is_zero(c.momentum));
}

TEST_CASE("d1q2 has no nontrivial classes") {
  auto D = build_discretization("d1q2");
  CHECK(nontrivial_classes(D).empty());
  CHECK(max_class_size(D) == 1);
}

TEST_CASE("classes partition the configuration space") {
  for (auto name : {"d1q2", "d2q4", "d3q6", "d3q15"}) {
    auto D = build_discretization(name);
    auto all = enumerate_classes(D);
    std::size_t total = 0;
    std::set<std::uint32_t> seen;
    for (auto& c : all) {
      total += c.size();
      CHECK(std::is_sorted(c.members.begin(), c.members.end()));
      for (auto m : c.members) {
        CHECK(popcount(m) == c.mass);
        CHECK(momentum_of(D, m) == c.momentum);
        seen.insert(m);
      }
    }
    CHECK(total == (std::size_t{1} << D.q));
    CHECK(seen.size() == total);
    for (std::size_t i = 1; i < all.size(); ++i)
      CHECK(std::make_pair(all[i - 1].mass, all[i - 1].momentum) < std::make_pair(all[i].mass, all[i].momentum));
  }
}

TEST_CASE("opposite flip maps a class onto the class with negated momentum") {
  for (auto name : {"d2q4", "d3q6", "d3q15"}) {
    auto D = build_discretization(name);
    auto all = enumerate_classes(D);
    std::map<std::pair<int, Vec>, std::set<std::uint32_t>> by_key;
    for (auto& c : all) by_key[{c.mass, c.momentum}] = {c.members.begin(), c.members.end()};
    for (auto& c : all)
      for (auto m : c.members) {
        std::uint32_t f = 0;
        for (int j = 0; j < D.q; ++j)
          if (m >> j & 1u) f |= 1u << D.opposite[j];
        CHECK(by_key[{c.mass, -c.momentum}].count(f) == 1);
      }
  }
}

TEST_CASE("bit strings and ranks") {
  CHECK(bits_to_mask("1000") == 1u);
  CHECK(bits_to_mask("0101") == 10u);
  CHECK(mask_to_bits(10u, 4) == "0101");
  CHECK_THROWS_AS(bits_to_mask("10x0"), InvalidSpec);
  EquivalenceClass c{2, {0, 0, 0}, {5u, 10u}};
  CHECK(c.rank_of(5u) == 0);
  CHECK(c.rank_of(10u) == 1);
  CHECK(c.rank_of(3u) == -1);
}

TEST_CASE("enumeration rejects oversized stencils") {
  Discretization D = build_discretization("d2q4");
  D.q = 21;
  CHECK_THROWS_AS(enumerate_classes(D), StencilTooLarge);
}
