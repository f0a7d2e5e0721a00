// SPDX-License-Identifier: Apache-2.0

#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <cstdlib>
#include <vector>

#include "dmol/sampler.hpp"

using namespace dmol;

namespace {

Graph chain_graph(const ClassVocab& vocab) {
  Graph g(5, vocab);
  g.set_node_class(0, 1);
  g.set_node_class(2, 1);
  g.set_node_class(4, 1);
  g.set_edge_class(0, 1, 1);
  g.set_edge_class(1, 2, 2);
  g.set_edge_class(2, 3, 1);
  g.set_edge_class(3, 4, 1);
  return g;
}

Marginals toy_marginals() {
  Marginals m;
  m.node = {0.6, 0.4};
  m.edge = {0.7, 0.2, 0.1};
  return m;
}

}  // namespace

TEST_CASE("sample_terminal honors degenerate marginals") {
  ClassVocab vocab{3, 2, 0};
  TerminalMarginals tm;
  tm.node = {0.0, 0.0, 1.0};
  tm.edge = {1.0, 0.0};
  RngStream rng(7);
  Graph g = sample_terminal(6, vocab, tm, rng);
  g.validate();
  for (int i = 0; i < 6; ++i) {
    CHECK(g.node_class(i) == 2);
    for (int j = 0; j < 6; ++j) CHECK(g.edge_class(i, j) == 0);
  }
}

TEST_CASE("sample_terminal frequencies match the marginals") {
  ClassVocab vocab{3, 3, 0};
  TerminalMarginals tm;
  tm.node = {0.5, 0.3, 0.2};
  tm.edge = {0.6, 0.3, 0.1};
  RngStream rng(99);

  const int graphs = 200;
  const int n = 25;  // 5000 nodes, 60000 pairs
  std::vector<long> node_counts(3, 0), edge_counts(3, 0);
  long node_total = 0, edge_total = 0;
  for (int trial = 0; trial < graphs; ++trial) {
    Graph g = sample_terminal(n, vocab, tm, rng);
    g.validate();
    for (int i = 0; i < n; ++i) {
      ++node_counts[g.node_class(i)];
      ++node_total;
      for (int j = i + 1; j < n; ++j) {
        ++edge_counts[g.edge_class(i, j)];
        ++edge_total;
      }
    }
  }
  for (int c = 0; c < 3; ++c) {
    double p = tm.node[c];
    double sigma = std::sqrt(p * (1 - p) * node_total);
    CHECK(std::abs(node_counts[c] - p * node_total) <= 3.5 * sigma);
    p = tm.edge[c];
    sigma = std::sqrt(p * (1 - p) * edge_total);
    CHECK(std::abs(edge_counts[c] - p * edge_total) <= 3.5 * sigma);
  }
}

TEST_CASE("sample_from_prediction commutes with relabeling") {
  ClassVocab vocab{2, 3, 0};
  RngStream rng(404);
  for (int trial = 0; trial < 50; ++trial) {
    Graph g(6, vocab);
    for (int i = 0; i < 6; ++i) {
      g.set_node_class(i, static_cast<int>(rng.next_below(2)));
    }
    for (int i = 0; i < 6; ++i) {
      for (int j = i + 1; j < 6; ++j) {
        g.set_edge_class(i, j, static_cast<int>(rng.next_below(3)));
      }
    }
    // random rows instead of a trained model; normalize by hand
    Prediction p = Prediction::one_hot(g);
    for (double& v : p.node_probs) v = 0.25 + rng.next_unit();
    for (int i = 0; i < 6; ++i) {
      double sum = 0.0;
      for (int c = 0; c < 2; ++c) sum += p.node_prob(i, c);
      for (int c = 0; c < 2; ++c) p.node_prob(i, c) /= sum;
    }
    for (int i = 0; i < 6; ++i) {
      for (int j = i + 1; j < 6; ++j) {
        double sum = 0.0;
        for (int c = 0; c < 3; ++c) {
          double v = 0.25 + rng.next_unit();
          p.edge_prob(i, j, c) = v;
          p.edge_prob(j, i, c) = v;
          sum += v;
        }
        for (int c = 0; c < 3; ++c) {
          p.edge_prob(i, j, c) /= sum;
          p.edge_prob(j, i, c) /= sum;
        }
      }
    }

    std::vector<double> node_units(6), edge_units(15);
    for (double& u : node_units) u = rng.next_unit();
    for (double& u : edge_units) u = rng.next_unit();

    Permutation perm = Permutation::random(6, rng);
    Permutation inv = perm.inverse();
    // permuted call sees draw for output slot i at the slot carrying input
    // node perm(i)
    std::vector<double> perm_node_units(6);
    for (int i = 0; i < 6; ++i) perm_node_units[i] = node_units[perm(i)];
    std::vector<double> perm_edge_units(15);
    int out_q = 0;
    for (int i = 0; i < 6; ++i) {
      for (int j = i + 1; j < 6; ++j, ++out_q) {
        int a = perm(i), b = perm(j);
        if (a > b) std::swap(a, b);
        int src_q = 0, found = -1;
        for (int x = 0; x < 6 && found < 0; ++x) {
          for (int y = x + 1; y < 6; ++y, ++src_q) {
            if (x == a && y == b) {
              found = src_q;
              break;
            }
          }
        }
        perm_edge_units[out_q] = edge_units[found];
      }
    }

    Graph direct = apply_permutation(
        sample_from_prediction(p, vocab, node_units, edge_units), perm);
    Graph routed = sample_from_prediction(apply_permutation(p, perm), vocab,
                                          perm_node_units, perm_edge_units);
    CHECK(direct == routed);
    (void)inv;
  }
}

TEST_CASE("reverse_step with the oracle hits the exact level budgets") {
  ClassVocab vocab{2, 3, 0};
  Graph clean = chain_graph(vocab);
  OracleDenoiser oracle(clean);
  ScheduleParams sp = ScheduleParams::for_graph(5);
  TransitionMatrices q = build_transitions(toy_marginals());
  TerminalMarginals tm = terminal_marginals(toy_marginals(), sp.r);
  RngStream rng(31337);

  for (int t = 1; t <= sp.T; ++t) {
    StepBudget prev = step_budget(t - 1, sp);
    for (int trial = 0; trial < 20; ++trial) {
      RngStream trng = rng.derive("trial", t * 1000 + trial);
      Graph g_t = sample_terminal(5, vocab, tm, trng);
      Graph stepped = reverse_step(oracle, g_t, t, sp, q, trng);
      stepped.validate();
      CHECK(hamming_nodes(stepped, clean) == prev.n_nodes);
      CHECK(hamming_edges(stepped, clean) == prev.n_edges);
    }
  }
}

TEST_CASE("reverse_step at t=1 returns the sampled candidate") {
  ClassVocab vocab{2, 3, 0};
  Graph clean = chain_graph(vocab);
  OracleDenoiser oracle(clean);
  ScheduleParams sp = ScheduleParams::for_graph(5);
  TransitionMatrices q = build_transitions(toy_marginals());
  RngStream rng(8);
  Graph g_t = sample_terminal(5, vocab, terminal_marginals(toy_marginals(), sp.r), rng);
  // oracle prediction is one-hot, so the candidate is the clean graph itself
  CHECK(reverse_step(oracle, g_t, 1, sp, q, rng) == clean);
}

TEST_CASE("sample with a fixed oracle reproduces its graph") {
  ClassVocab vocab{2, 3, 0};
  Graph clean = chain_graph(vocab);
  OracleDenoiser oracle(clean);
  SampleConfig cfg;
  cfg.vocab = vocab;
  cfg.node_count_distribution = {{5, 1.0}};
  cfg.batch = 16;
  cfg.schedule = ScheduleParams{};
  cfg.marginals = toy_marginals();
  RngStream rng(555);
  std::vector<Graph> out = sample(oracle, cfg, rng);
  REQUIRE(out.size() == 16);
  for (const Graph& g : out) CHECK(g == clean);
}

TEST_CASE("sampling is deterministic and thread-count independent") {
  ClassVocab vocab{2, 2, 0};
  MpnnConfig mcfg{1, 6, 4, 6};
  RngStream init(12);
  MpnnDenoiser d(vocab, mcfg, init.derive("init"));

  SampleConfig cfg;
  cfg.vocab = vocab;
  cfg.node_count_distribution = {{3, 0.25}, {4, 0.5}, {6, 0.25}};
  cfg.batch = 12;
  cfg.schedule = ScheduleParams{};
  Marginals m;
  m.node = {0.5, 0.5};
  m.edge = {0.75, 0.25};
  cfg.marginals = m;

  auto run = [&]() {
    RngStream rng(777);
    return sample(d, cfg, rng);
  };
  std::vector<Graph> first = run();
  for (const Graph& g : first) g.validate();
  CHECK(first == run());

  setenv("DMOL_THREADS", "4", 1);
  std::vector<Graph> threaded = run();
  setenv("DMOL_THREADS", "1", 1);
  std::vector<Graph> serial = run();
  unsetenv("DMOL_THREADS");
  CHECK(threaded == first);
  CHECK(serial == first);

  // node counts only come from the configured support
  for (const Graph& g : first) {
    CHECK((g.size() == 3 || g.size() == 4 || g.size() == 6));
  }
}

TEST_CASE("sample config validation rejects bad distributions") {
  SampleConfig cfg;
  cfg.vocab = ClassVocab{2, 2, 0};
  cfg.marginals.node = {0.5, 0.5};
  cfg.marginals.edge = {0.5, 0.5};
  cfg.node_count_distribution = {{4, 0.5}};
  CHECK_THROWS_AS(cfg.validate(), std::invalid_argument);
  cfg.node_count_distribution = {{0, 0.5}, {4, 0.5}};
  CHECK_THROWS_AS(cfg.validate(), std::invalid_argument);
  cfg.node_count_distribution = {{4, 1.0}};
  CHECK_NOTHROW(cfg.validate());
  cfg.marginals.edge = {0.5, 0.25, 0.25};
  CHECK_THROWS_AS(cfg.validate(), std::invalid_argument);
}

TEST_CASE("empirical node-count distribution") {
  ClassVocab vocab{2, 2, 0};
  std::vector<Graph> dataset;
  dataset.emplace_back(3, vocab);
  dataset.emplace_back(5, vocab);
  dataset.emplace_back(3, vocab);
  dataset.emplace_back(4, vocab);
  std::map<int, double> dist = node_count_distribution(dataset);
  CHECK(dist.size() == 3);
  CHECK(dist[3] == 0.5);
  CHECK(dist[4] == 0.25);
  CHECK(dist[5] == 0.25);
}
