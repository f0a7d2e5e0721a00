// SPDX-License-Identifier: Apache-2.0

#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <map>
#include <vector>

#include "dmol/schedule.hpp"

using dmol::ScheduleParams;
using dmol::StepBudget;

TEST_CASE("parameter validation") {
  CHECK_NOTHROW(ScheduleParams::for_graph(6));
  CHECK_THROWS(ScheduleParams::for_graph(0));
  CHECK_THROWS(ScheduleParams::for_graph(6, 0));
  CHECK_THROWS(ScheduleParams::for_graph(6, 2, 0.0));
  CHECK_THROWS(ScheduleParams::for_graph(6, 2, 1.5));
  CHECK_THROWS(ScheduleParams::for_graph(6, 2, 0.2, 0.0));
  ScheduleParams broken = ScheduleParams::for_graph(6);
  broken.T = 13;
  CHECK_THROWS(broken.validate());
}

TEST_CASE("alpha endpoints and monotonicity") {
  ScheduleParams p = ScheduleParams::for_graph(9);
  CHECK(dmol::alpha(p.T, p) == 0.0);
  // Fixed-precision reference: cos^2(0.5*pi*0.008/1.008).
  CHECK(dmol::alpha(0, p) == doctest::Approx(0.99984459100040814208).epsilon(1e-12));
  double prev = 2.0;
  for (int t = 0; t <= p.T; ++t) {
    double a = dmol::alpha(t, p);
    CHECK(a >= 0.0);
    CHECK(a <= 1.0);
    CHECK(a < prev);
    prev = a;
  }
  CHECK_THROWS(dmol::alpha(-1, p));
  CHECK_THROWS(dmol::alpha(p.T + 1, p));
}

TEST_CASE("alpha midpoint matches a high-precision reference") {
  ScheduleParams p = ScheduleParams::for_graph(6);  // T = 12
  CHECK(dmol::alpha(6, p) ==
        doctest::Approx(0.4937668427022924826).epsilon(1e-12));
}

TEST_CASE("budget staircases for n=6, k=2, r=0.2") {
  ScheduleParams p = ScheduleParams::for_graph(6, 2, 0.2, 0.008);
  // Fixed-precision reference values for the full staircase.
  std::vector<int> want_n = {0, 0, 0, 0, 1, 2, 3, 3, 4, 5, 5, 5, 6};
  std::vector<int> want_m = {0, 0, 0, 0, 0, 0, 0, 0, 0, 1, 1, 1, 3};
  for (int t = 0; t <= p.T; ++t) {
    CHECK(dmol::node_budget(t, p) == want_n[t]);
    CHECK(dmol::edge_budget(t, p) == want_m[t]);
  }
}

TEST_CASE("budget staircases for n=9, k=2, r=0.2") {
  ScheduleParams p = ScheduleParams::for_graph(9, 2, 0.2, 0.008);
  std::vector<int> want_n = {0, 0, 0, 0, 1, 1, 2, 3, 3, 4,
                             5, 6, 6, 7, 7, 8, 8, 8, 9};
  std::vector<int> want_m = {0, 0, 0, 0, 0, 0, 0, 0, 0, 0,
                             1, 2, 2, 3, 3, 5, 5, 5, 7};
  for (int t = 0; t <= p.T; ++t) {
    CHECK(dmol::node_budget(t, p) == want_n[t]);
    CHECK(dmol::edge_budget(t, p) == want_m[t]);
  }
}

TEST_CASE("endpoint identities across a parameter grid") {
  std::vector<int> ns = {1, 2, 5, 9, 12};
  std::vector<int> ks = {1, 2, 5};
  std::vector<double> rs = {0.1, 0.2, 0.3, 1.0};
  for (int n : ns) {
    for (int k : ks) {
      for (double r : rs) {
        ScheduleParams p = ScheduleParams::for_graph(n, k, r, 0.008);
        CHECK(dmol::alpha(p.T, p) == 0.0);
        CHECK(dmol::node_budget(p.T, p) == n);
        // Exact-rational floor of r*n(n-1)/2 without double rounding traps:
        // r comes from the grid so 10*r is integral.
        long long num = std::llround(r * 10) * n * (n - 1);
        CHECK(dmol::edge_budget(p.T, p) == static_cast<int>(num / 20));
        CHECK(dmol::node_budget(0, p) == 0);
        CHECK(dmol::edge_budget(0, p) == 0);
      }
    }
  }
}

TEST_CASE("budget invariants hold at every step") {
  for (int n : {1, 2, 3, 6, 9, 12}) {
    for (int k : {1, 2, 5}) {
      for (double r : {0.05, 0.2, 0.77, 1.0}) {
        ScheduleParams p = ScheduleParams::for_graph(n, k, r, 0.008);
        int prev_n = 0;
        for (int t = 0; t <= p.T; ++t) {
          StepBudget b = dmol::step_budget(t, p);
          CHECK(b.n_nodes >= prev_n);
          CHECK(b.n_nodes <= n);
          CHECK(b.n_edges >= 0);
          CHECK(b.n_edges <= b.n_nodes * (b.n_nodes - 1) / 2);
          if (b.n_nodes <= 1) CHECK(b.n_edges == 0);
          CHECK(b.rx == doctest::Approx(static_cast<double>(b.n_nodes) / n));
          if (n >= 2) {
            CHECK(b.re ==
                  doctest::Approx(b.n_edges / (0.5 * n * (n - 1))));
          } else {
            CHECK(b.re == 0.0);
          }
          prev_n = b.n_nodes;
        }
        CHECK(dmol::step_budget(p.T, p).rx == doctest::Approx(1.0));
      }
    }
  }
}

TEST_CASE("raising k stretches each budget level proportionally") {
  // Number of steps t at which N(t) == v, per k (n = 9, c = 0.008).
  auto level_counts = [](int k) {
    ScheduleParams p = ScheduleParams::for_graph(9, k, 0.2, 0.008);
    std::map<int, int> counts;
    for (int t = 0; t <= p.T; ++t) ++counts[dmol::node_budget(t, p)];
    return counts;
  };
  auto base = level_counts(1);
  for (int k : {2, 5}) {
    auto stretched = level_counts(k);
    for (int v = 0; v <= 9; ++v) {
      double scaled = stretched.count(v) ? stretched[v] / double(k) : 0.0;
      double reference = base.count(v) ? base[v] : 0.0;
      CHECK(std::abs(scaled - reference) <= 1.0);
    }
  }
}
