// SPDX-License-Identifier: Apache-2.0

#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <vector>

#include "dmol/analysis.hpp"
#include "dmol/noise.hpp"
#include "dmol/rng.hpp"

using namespace dmol;

namespace {

Marginals toy_marginals() {
  Marginals m;
  m.node = {0.7, 0.15, 0.1, 0.05};
  m.edge = {0.8, 0.15, 0.05};
  return m;
}

Graph marginal_graph(int n, const Marginals& m, RngStream& rng) {
  Graph g(n, ClassVocab{static_cast<int>(m.node.size()),
                        static_cast<int>(m.edge.size()), 0});
  for (int i = 0; i < n; ++i) g.set_node_class(i, rng.sample_categorical(m.node));
  for (int i = 0; i < n; ++i)
    for (int j = i + 1; j < n; ++j)
      g.set_edge_class(i, j, rng.sample_categorical(m.edge));
  return g;
}

double sum_p_one_minus_p(const std::vector<double>& p) {
  double s = 0.0;
  for (double x : p) s += x * (1.0 - x);
  return s;
}

}  // namespace

TEST_CASE("digress transition matrix") {
  std::vector<double> m{0.5, 0.3, 0.2};

  auto eye = digress_transition(1.0, m);
  for (int i = 0; i < 3; ++i)
    for (int j = 0; j < 3; ++j)
      CHECK(eye[i][j] == (i == j ? 1.0 : 0.0));

  auto full = digress_transition(0.0, m);
  for (int i = 0; i < 3; ++i)
    for (int j = 0; j < 3; ++j) CHECK(full[i][j] == m[j]);

  auto half = digress_transition(0.5, m);
  CHECK(half[0][0] == doctest::Approx(0.75).epsilon(1e-12));
  CHECK(half[0][1] == doctest::Approx(0.15).epsilon(1e-12));
  CHECK(half[0][2] == doctest::Approx(0.10).epsilon(1e-12));

  RngStream rng(5);
  for (int trial = 0; trial < 50; ++trial) {
    double ab = rng.next_unit();
    auto rows = digress_transition(ab, m);
    for (const auto& row : rows) {
      double s = 0.0;
      for (double x : row) s += x;
      CHECK(s == doctest::Approx(1.0).epsilon(1e-12));
    }
  }

  CHECK_THROWS_AS(digress_transition(1.5, m), std::invalid_argument);
  CHECK_THROWS_AS(digress_transition(0.5, std::vector<double>{0.5, 0.6}),
                  std::invalid_argument);
}

TEST_CASE("efficiency ratio") {
  CHECK(efficiency_ratio(std::vector<double>{0.5, 0.5}) ==
        doctest::Approx(2.0).epsilon(1e-12));
  CHECK(efficiency_ratio(std::vector<double>{0.75, 0.25}) ==
        doctest::Approx(8.0 / 3.0).epsilon(1e-12));

  RngStream rng(17);
  for (int trial = 0; trial < 300; ++trial) {
    int a = 2 + static_cast<int>(rng.next_below(5));
    std::vector<double> m(a);
    double sum = 0.0;
    for (double& x : m) {
      x = 0.05 + rng.next_unit();
      sum += x;
    }
    for (double& x : m) x /= sum;
    CHECK(efficiency_ratio(m) > 1.0);
  }

  CHECK_THROWS_AS(efficiency_ratio(std::vector<double>{1.0, 0.0}),
                  std::invalid_argument);
  CHECK_THROWS_AS(efficiency_ratio(std::vector<double>{0.5, 0.4}),
                  std::invalid_argument);
}

TEST_CASE("neutral compat matches the native forward") {
  Marginals m = toy_marginals();
  TransitionMatrices q = build_transitions(m);
  const int n = 9;
  ScheduleParams params = ScheduleParams::for_graph(n);
  DigressCompatConfig cfg = DigressCompatConfig::neutral_for(params);
  CHECK(cfg.neutral());

  RngStream init(99);
  Graph g0 = marginal_graph(n, m, init);
  for (int t = 0; t <= params.T; ++t) {
    RngStream r1(1000 + t);
    RngStream r2(1000 + t);
    int warn = -1;
    Graph via_compat = compat_forward(g0, t, cfg, q, r1, &warn);
    Graph via_native = forward_noise(g0, t, params, q, r2).graph;
    CHECK(via_compat == via_native);
    CHECK(warn == 0);
  }
}

TEST_CASE("digress knobs hit the closed-form change counts") {
  Marginals m = toy_marginals();
  TransitionMatrices q = build_transitions(m);
  const int n = 12;
  ScheduleParams params = ScheduleParams::for_graph(n);
  DigressCompatConfig cfg = DigressCompatConfig::digress_for(params, m);
  cfg.validate();
  const double scale = sum_p_one_minus_p(m.node);
  CHECK(cfg.node_scale == doctest::Approx(scale).epsilon(1e-12));
  CHECK(cfg.edge_scale_inv ==
        doctest::Approx(sum_p_one_minus_p(m.edge) / params.r).epsilon(1e-12));
  CHECK(cfg.independent_edges);
  REQUIRE(cfg.selection_weights_node.size() == m.node.size());
  for (std::size_t i = 0; i < m.node.size(); ++i)
    CHECK(cfg.selection_weights_node[i] ==
          doctest::Approx(1.0 - m.node[i]).epsilon(1e-12));

  RngStream rng(321);
  const int trials = 4000;
  const ScheduleParams synth = ScheduleParams::for_graph(cfg.fixed_T, 1);
  for (int t : {params.T / 4, params.T / 2, params.T}) {
    double abar = alpha(t, synth) / alpha(0, synth);
    double expected = n * (1.0 - abar) * scale;
    double total = 0.0;
    std::vector<double> class_counts(m.node.size(), 0.0);
    for (int trial = 0; trial < trials; ++trial) {
      RngStream srng = rng.derive("mc", static_cast<std::uint64_t>(t) * trials + trial);
      Graph g0 = marginal_graph(n, m, srng);
      Graph gt = compat_forward(g0, t, cfg, q, srng);
      for (int i = 0; i < n; ++i) {
        if (gt.node_class(i) != g0.node_class(i)) {
          total += 1.0;
          class_counts[g0.node_class(i)] += 1.0;
        }
      }
    }
    double mc = total / trials;
    // Independent per-node changes: per-trial variance at most n/4.
    double sigma = std::sqrt(n * 0.25 / trials);
    CHECK(std::abs(mc - expected) <= 3.5 * sigma + 1e-9);

    // Class share of changed nodes tracks p_i(1-p_i).
    if (total > 0) {
      for (std::size_t i = 0; i < m.node.size(); ++i) {
        double share = m.node[i] * (1.0 - m.node[i]) / scale;
        double got = class_counts[i] / total;
        double share_sigma = std::sqrt(share * (1.0 - share) / total);
        CHECK(std::abs(got - share) <= 3.5 * share_sigma + 1e-9);
      }
    }
  }
}

TEST_CASE("compat clamps impossible budgets") {
  Marginals m = toy_marginals();
  TransitionMatrices q = build_transitions(m);
  const int n = 6;
  ScheduleParams params = ScheduleParams::for_graph(n);

  // Per-slot rate above 1 is clipped and reported.
  DigressCompatConfig cfg = DigressCompatConfig::neutral_for(params);
  cfg.selection_weights_node = {2.0, 2.0, 2.0, 2.0};
  RngStream rng(8);
  int warn = -1;
  Graph g0(n, ClassVocab{4, 3, 0});
  Graph gt = compat_forward(g0, params.T, cfg, q, rng, &warn);
  CHECK(warn >= 1);
  for (int i = 0; i < n; ++i) CHECK(gt.node_class(i) != g0.node_class(i));

  // Zero-rate classes are never selected.
  DigressCompatConfig still = DigressCompatConfig::neutral_for(params);
  still.selection_weights_node = {0.0, 1.0, 1.0, 1.0};
  RngStream rng2(9);
  Graph same = compat_forward(g0, params.T, still, q, rng2, &warn);
  CHECK(warn == 0);
  for (int i = 0; i < n; ++i) CHECK(same.node_class(i) == g0.node_class(i));

  // An unweighted edge budget bigger than the pair pool clamps.
  DigressCompatConfig heavy = DigressCompatConfig::neutral_for(params);
  heavy.independent_edges = true;
  heavy.edge_scale_inv = 50.0;
  RngStream rng3(10);
  compat_forward(g0, params.T, heavy, q, rng3, &warn);
  CHECK(warn >= 1);
}

TEST_CASE("hamming curves") {
  Marginals m = toy_marginals();
  const int n = 6;
  ScheduleParams params = ScheduleParams::for_graph(n);
  DigressCompatConfig cfg = DigressCompatConfig::digress_for(params, m);

  RngStream rng(2024);
  const int trials = 3000;
  HammingCurves curves = hamming_curves(m, params, cfg, trials, rng);
  REQUIRE(static_cast<int>(curves.dmol.size()) == params.T + 1);
  REQUIRE(static_cast<int>(curves.digress.size()) == cfg.fixed_T + 1);

  CHECK(curves.dmol[0] == 0.0);
  CHECK(curves.digress[0] == 0.0);
  CHECK(curves.dmol[params.T] == doctest::Approx(n).epsilon(1e-12));

  // The native curve is the budget exactly; the emulation tracks its own
  // closed form; the native curve dominates once it lifts off.
  const double scale = sum_p_one_minus_p(m.node);
  const ScheduleParams synth = ScheduleParams::for_graph(cfg.fixed_T, 1);
  int first = 0;
  while (first <= params.T && curves.dmol[first] == 0.0) ++first;
  for (int t = 0; t <= params.T; ++t) {
    CHECK(curves.dmol[t] == doctest::Approx(node_budget(t, params))
                                .epsilon(1e-12));
    double closed = n * (1.0 - alpha(t, synth) / alpha(0, synth)) * scale;
    double sigma = std::sqrt(static_cast<double>(n) * 0.25 / trials) + 1e-12;
    CHECK(std::abs(curves.digress[t] - closed) <= 4.0 * sigma + 1e-9);
    if (t >= first)
      CHECK(curves.dmol[t] >= curves.digress[t] - 4.0 * sigma);
  }

  // Determinism.
  RngStream rng2(2024);
  HammingCurves again = hamming_curves(m, params, cfg, trials, rng2);
  CHECK(again.dmol == curves.dmol);
  CHECK(again.digress == curves.digress);
}

TEST_CASE("stationarity of the marginal under digress chains") {
  Marginals m;
  m.node = {0.5, 0.3, 0.2};
  m.edge = {0.8, 0.2};

  RngStream rng(77);
  double dev = stationarity_check(m, 20, 100000, rng);
  CHECK(dev < 0.01);

  // The native forward moves the node distribution away from m.
  TransitionMatrices q = build_transitions(m);
  const int n = 8;
  ScheduleParams params = ScheduleParams::for_graph(n);
  RngStream mrng(78);
  std::vector<double> counts(m.node.size(), 0.0);
  const int trials = 20000;
  for (int trial = 0; trial < trials; ++trial) {
    RngStream srng = mrng.derive("dmol-shift", trial);
    Graph g0 = marginal_graph(n, m, srng);
    Graph gt = forward_noise(g0, params.T, params, q, srng).graph;
    for (int i = 0; i < n; ++i) counts[gt.node_class(i)] += 1.0;
  }
  double moved = 0.0;
  for (std::size_t c = 0; c < counts.size(); ++c)
    moved = std::max(moved, std::abs(counts[c] / (trials * n) - m.node[c]));
  CHECK(moved > 0.05);
}

TEST_CASE("edge correction factor") {
  CHECK(edge_correction(2, 5) == doctest::Approx(0.1).epsilon(1e-12));
  CHECK(edge_correction(5, 5) == doctest::Approx(1.0).epsilon(1e-12));
  CHECK(edge_correction(0, 5) == 0.0);
  CHECK(edge_correction(1, 5) == 0.0);
  CHECK_THROWS_AS(edge_correction(1, 1), std::invalid_argument);
  CHECK_THROWS_AS(edge_correction(6, 5), std::invalid_argument);
}
