// SPDX-License-Identifier: Apache-2.0

#include "dmol/sampler.hpp"

#include <cmath>
#include <stdexcept>
#include <string>
#include <utility>

#include "dmol/parallel.hpp"

namespace dmol {

void SampleConfig::validate() const {
  vocab.validate();
  if (node_count_distribution.empty()) {
    throw std::invalid_argument("SampleConfig: empty node-count distribution");
  }
  double sum = 0.0;
  for (const auto& [n, p] : node_count_distribution) {
    if (n < 1) {
      throw std::invalid_argument("SampleConfig: supported n must be >= 1");
    }
    if (p < 0.0) {
      throw std::invalid_argument("SampleConfig: negative probability");
    }
    sum += p;
  }
  if (std::abs(sum - 1.0) > 1e-9) {
    throw std::invalid_argument(
        "SampleConfig: node-count distribution must sum to 1");
  }
  if (batch < 0) throw std::invalid_argument("SampleConfig: negative batch");
  if (schedule.k < 1) throw std::invalid_argument("SampleConfig: k must be >= 1");
  if (!(schedule.r > 0.0) || schedule.r > 1.0) {
    throw std::invalid_argument("SampleConfig: r must be in (0, 1]");
  }
  if (schedule.c < 0.0) throw std::invalid_argument("SampleConfig: c must be >= 0");
  marginals.validate();
  if (marginals.node.size() != static_cast<std::size_t>(vocab.node_class_count) ||
      marginals.edge.size() != static_cast<std::size_t>(vocab.edge_class_count)) {
    throw std::invalid_argument("SampleConfig: marginals do not match vocab");
  }
}

std::map<int, double> node_count_distribution(std::span<const Graph> dataset) {
  if (dataset.empty()) {
    throw std::invalid_argument("node_count_distribution: empty dataset");
  }
  std::map<int, double> dist;
  for (const Graph& g : dataset) dist[g.size()] += 1.0;
  for (auto& [n, p] : dist) p /= static_cast<double>(dataset.size());
  return dist;
}

Graph sample_terminal(int n, const ClassVocab& vocab,
                      const TerminalMarginals& tm, RngStream& rng) {
  vocab.validate();
  if (n < 0) throw std::invalid_argument("sample_terminal: negative n");
  if (tm.node.size() != static_cast<std::size_t>(vocab.node_class_count) ||
      tm.edge.size() != static_cast<std::size_t>(vocab.edge_class_count)) {
    throw std::invalid_argument("sample_terminal: marginal size mismatch");
  }
  Graph g(n, vocab);
  for (int i = 0; i < n; ++i) {
    g.set_node_class(i, rng.sample_categorical(tm.node));
  }
  for (int i = 0; i < n; ++i) {
    for (int j = i + 1; j < n; ++j) {
      g.set_edge_class(i, j, rng.sample_categorical(tm.edge));
    }
  }
  return g;
}

Graph sample_from_prediction(const Prediction& p, const ClassVocab& vocab,
                             std::span<const double> node_units,
                             std::span<const double> edge_units) {
  if (p.node_class_count != vocab.node_class_count ||
      p.edge_class_count != vocab.edge_class_count) {
    throw std::invalid_argument("sample_from_prediction: vocab mismatch");
  }
  int n = p.n;
  if (node_units.size() != static_cast<std::size_t>(n) ||
      edge_units.size() != static_cast<std::size_t>(n) * (n - 1) / 2) {
    throw std::invalid_argument("sample_from_prediction: draw count mismatch");
  }
  Graph g(n, vocab);
  for (int i = 0; i < n; ++i) {
    std::span<const double> row(
        p.node_probs.data() + static_cast<std::size_t>(i) * p.node_class_count,
        p.node_class_count);
    g.set_node_class(i, categorical_from_unit(row, node_units[i]));
  }
  std::size_t q = 0;
  for (int i = 0; i < n; ++i) {
    for (int j = i + 1; j < n; ++j, ++q) {
      std::span<const double> row(
          p.edge_probs.data() +
              (static_cast<std::size_t>(i) * n + j) * p.edge_class_count,
          p.edge_class_count);
      g.set_edge_class(i, j, categorical_from_unit(row, edge_units[q]));
    }
  }
  return g;
}

Graph reverse_step(const Denoiser& d, const Graph& g_t, int t,
                   const ScheduleParams& params, const TransitionMatrices& q,
                   RngStream& rng) {
  if (t < 1 || t > params.T) {
    throw std::out_of_range("reverse_step: t outside [1, T]");
  }
  Prediction p =
      d.predict(make_denoiser_input(g_t, t, params, d.feature_n_max()));
  int n = g_t.size();
  std::vector<double> node_units(n);
  for (double& u : node_units) u = rng.next_unit();
  std::vector<double> edge_units(static_cast<std::size_t>(n) * (n - 1) / 2);
  for (double& u : edge_units) u = rng.next_unit();
  Graph candidate =
      sample_from_prediction(p, g_t.vocab(), node_units, edge_units);
  return forward_noise(candidate, t - 1, params, q, rng).graph;
}

std::vector<Graph> sample(const Denoiser& d, const SampleConfig& cfg,
                          RngStream& rng) {
  cfg.validate();
  TransitionMatrices q = build_transitions(cfg.marginals);
  TerminalMarginals tm = terminal_marginals(cfg.marginals, cfg.schedule.r);

  std::vector<int> supported;
  std::vector<double> weights;
  supported.reserve(cfg.node_count_distribution.size());
  for (const auto& [n, p] : cfg.node_count_distribution) {
    supported.push_back(n);
    weights.push_back(p);
  }

  std::vector<Graph> out(cfg.batch, Graph(0, cfg.vocab));
  parallel_for(cfg.batch, [&](int s) {
    RngStream srng = rng.derive("sample", static_cast<std::uint64_t>(s));
    int n = supported[categorical_from_unit(weights, srng.next_unit())];
    ScheduleParams sp = ScheduleParams::for_graph(n, cfg.schedule.k,
                                                  cfg.schedule.r,
                                                  cfg.schedule.c);
    Graph g = sample_terminal(n, cfg.vocab, tm, srng);
    for (int t = sp.T; t >= 1; --t) {
      g = reverse_step(d, g, t, sp, q, srng);
    }
    out[s] = std::move(g);
  });
  return out;
}

}  // namespace dmol
