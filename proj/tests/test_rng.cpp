// SPDX-License-Identifier: Apache-2.0

#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <set>
#include <vector>

#include "dmol/rng.hpp"

using dmol::RngStream;

TEST_CASE("same seed reproduces the same sequence") {
  RngStream a(42);
  RngStream b(42);
  for (int i = 0; i < 100; ++i) CHECK(a.next_u64() == b.next_u64());
}

TEST_CASE("different seeds diverge") {
  RngStream a(1);
  RngStream b(2);
  int same = 0;
  for (int i = 0; i < 64; ++i) {
    if (a.next_u64() == b.next_u64()) ++same;
  }
  CHECK(same == 0);
}

TEST_CASE("derive is keyed by label and index, not draw position") {
  RngStream root(7);
  RngStream d1 = root.derive("train", 0);
  root.next_u64();
  root.next_u64();
  RngStream d2 = root.derive("train", 0);
  CHECK(d1.next_u64() == d2.next_u64());

  RngStream other_label = root.derive("sample", 0);
  RngStream other_index = root.derive("train", 1);
  RngStream base = root.derive("train", 0);
  CHECK(base.next_u64() != other_label.next_u64());
  RngStream base2 = root.derive("train", 0);
  CHECK(base2.next_u64() != other_index.next_u64());
}

TEST_CASE("next_unit stays in [0, 1) and covers the range") {
  RngStream r(3);
  double lo = 1.0;
  double hi = 0.0;
  for (int i = 0; i < 10000; ++i) {
    double u = r.next_unit();
    CHECK(u >= 0.0);
    CHECK(u < 1.0);
    lo = std::min(lo, u);
    hi = std::max(hi, u);
  }
  CHECK(lo < 0.01);
  CHECK(hi > 0.99);
}

TEST_CASE("next_below respects the bound and is roughly uniform") {
  RngStream r(11);
  std::vector<int> counts(5, 0);
  const int trials = 50000;
  for (int i = 0; i < trials; ++i) {
    auto v = r.next_below(5);
    REQUIRE(v < 5);
    ++counts[v];
  }
  // 3 sigma for binomial(trials, 1/5).
  double expect = trials / 5.0;
  double sigma = std::sqrt(trials * 0.2 * 0.8);
  for (int c : counts) CHECK(std::abs(c - expect) < 3.0 * sigma);
  CHECK_THROWS(r.next_below(0));
}

TEST_CASE("categorical_from_unit walks the CDF") {
  std::vector<double> p = {0.25, 0.5, 0.25};
  CHECK(dmol::categorical_from_unit(p, 0.0) == 0);
  CHECK(dmol::categorical_from_unit(p, 0.24) == 0);
  CHECK(dmol::categorical_from_unit(p, 0.25) == 1);
  CHECK(dmol::categorical_from_unit(p, 0.74) == 1);
  CHECK(dmol::categorical_from_unit(p, 0.75) == 2);
  CHECK(dmol::categorical_from_unit(p, 0.999999) == 2);

  std::vector<double> zero_tail = {0.0, 1.0, 0.0};
  CHECK(dmol::categorical_from_unit(zero_tail, 0.0) == 1);
  // Rounding slack lands on the last nonzero class, never on a zero one.
  CHECK(dmol::categorical_from_unit(zero_tail, 0.9999999999) == 1);

  CHECK_THROWS(dmol::categorical_from_unit(std::vector<double>{}, 0.5));
  CHECK_THROWS(dmol::categorical_from_unit(std::vector<double>{0.0, 0.0}, 0.5));
  CHECK_THROWS(dmol::categorical_from_unit(std::vector<double>{-0.1, 1.1}, 0.5));
}

TEST_CASE("sample_categorical matches its distribution") {
  RngStream r(19);
  std::vector<double> p = {0.1, 0.6, 0.3};
  std::vector<int> counts(3, 0);
  const int trials = 60000;
  for (int i = 0; i < trials; ++i) ++counts[r.sample_categorical(p)];
  for (int c = 0; c < 3; ++c) {
    double sigma = std::sqrt(trials * p[c] * (1 - p[c]));
    CHECK(std::abs(counts[c] - trials * p[c]) < 3.0 * sigma);
  }
}

TEST_CASE("sample_without_replacement yields sorted distinct indices") {
  RngStream r(23);
  for (int trial = 0; trial < 200; ++trial) {
    auto s = r.sample_without_replacement(10, 4);
    REQUIRE(s.size() == 4);
    CHECK(std::is_sorted(s.begin(), s.end()));
    std::set<int> uniq(s.begin(), s.end());
    CHECK(uniq.size() == 4);
    for (int v : s) CHECK((v >= 0 && v < 10));
  }
  CHECK(r.sample_without_replacement(5, 0).empty());
  auto all = r.sample_without_replacement(5, 5);
  CHECK(all == std::vector<int>{0, 1, 2, 3, 4});
  CHECK_THROWS(r.sample_without_replacement(3, 4));
}

TEST_CASE("sample_without_replacement inclusion is uniform") {
  RngStream r(29);
  std::vector<int> hits(8, 0);
  const int trials = 40000;
  for (int i = 0; i < trials; ++i) {
    for (int v : r.sample_without_replacement(8, 3)) ++hits[v];
  }
  // Each index is included with probability 3/8.
  double expect = trials * 3.0 / 8.0;
  double sigma = std::sqrt(trials * (3.0 / 8.0) * (5.0 / 8.0));
  for (int h : hits) CHECK(std::abs(h - expect) < 3.5 * sigma);
}

TEST_CASE("weighted sampling prefers heavy weights") {
  RngStream r(31);
  std::vector<double> w = {1.0, 1.0, 8.0};
  int heavy = 0;
  const int trials = 20000;
  for (int i = 0; i < trials; ++i) {
    auto s = r.weighted_sample_without_replacement(w, 1);
    REQUIRE(s.size() == 1);
    if (s[0] == 2) ++heavy;
  }
  double p = 0.8;
  double sigma = std::sqrt(trials * p * (1 - p));
  CHECK(std::abs(heavy - trials * p) < 3.0 * sigma);

  auto all = r.weighted_sample_without_replacement(w, 3);
  CHECK(all == std::vector<int>{0, 1, 2});
  CHECK_THROWS(r.weighted_sample_without_replacement(
      std::vector<double>{1.0, 0.0}, 1));
}
