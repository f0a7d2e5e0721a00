// SPDX-License-Identifier: Apache-2.0

#include "dmol/noise.hpp"

#include <cmath>
#include <cstddef>
#include <stdexcept>
#include <string>
#include <utility>

namespace dmol {

namespace {

void check_probability_vector(std::span<const double> p, const char* what) {
  if (p.empty()) {
    throw std::invalid_argument(std::string(what) + ": empty vector");
  }
  double sum = 0.0;
  for (double v : p) {
    if (!(v >= 0.0)) {
      throw std::invalid_argument(std::string(what) + ": negative entry");
    }
    sum += v;
  }
  if (std::abs(sum - 1.0) > 1e-9) {
    throw std::invalid_argument(std::string(what) + ": does not sum to 1");
  }
}

// Off-diagonal rows normalized by the mass outside class i. A unit entry
// leaves nothing to move to, which the forward process cannot represent.
std::vector<std::vector<double>> zero_diagonal_rows(
    std::span<const double> m, const char* what) {
  std::size_t k = m.size();
  std::vector<std::vector<double>> rows(k, std::vector<double>(k, 0.0));
  for (std::size_t i = 0; i < k; ++i) {
    double denom = 0.0;
    for (std::size_t j = 0; j < k; ++j) {
      if (j != i) denom += m[j];
    }
    if (!(denom > 0.0)) {
      throw std::invalid_argument(std::string(what) +
                                  ": degenerate marginal (entry equals 1)");
    }
    for (std::size_t j = 0; j < k; ++j) {
      if (j != i) rows[i][j] = m[j] / denom;
    }
  }
  return rows;
}

// p_i * sum_{j != i} p_j / (1 - p_j); the excluded-self sum is what makes the
// result normalize to 1.
std::vector<double> terminal_from(std::span<const double> m, const char* what) {
  std::size_t k = m.size();
  std::vector<double> out(k, 0.0);
  for (std::size_t j = 0; j < k; ++j) {
    if (m[j] >= 1.0) {
      throw std::invalid_argument(std::string(what) +
                                  ": degenerate marginal (entry equals 1)");
    }
  }
  for (std::size_t i = 0; i < k; ++i) {
    double s = 0.0;
    for (std::size_t j = 0; j < k; ++j) {
      if (j != i) s += m[j] / (1.0 - m[j]);
    }
    out[i] = m[i] * s;
  }
  return out;
}

}  // namespace

void Marginals::validate() const {
  check_probability_vector(node, "Marginals.node");
  check_probability_vector(edge, "Marginals.edge");
}

void TransitionMatrices::validate() const {
  auto check = [](const std::vector<std::vector<double>>& q, const char* what) {
    std::size_t k = q.size();
    if (k == 0) {
      throw std::invalid_argument(std::string(what) + ": empty matrix");
    }
    for (std::size_t i = 0; i < k; ++i) {
      if (q[i].size() != k) {
        throw std::invalid_argument(std::string(what) + ": not square");
      }
      if (q[i][i] != 0.0) {
        throw std::invalid_argument(std::string(what) + ": nonzero diagonal");
      }
      double sum = 0.0;
      for (std::size_t j = 0; j < k; ++j) {
        if (!(q[i][j] >= 0.0)) {
          throw std::invalid_argument(std::string(what) + ": negative entry");
        }
        sum += q[i][j];
      }
      if (std::abs(sum - 1.0) > 1e-9) {
        throw std::invalid_argument(std::string(what) +
                                    ": row does not sum to 1");
      }
    }
  };
  check(qx, "TransitionMatrices.qx");
  check(qe, "TransitionMatrices.qe");
}

Marginals estimate_marginals(std::span<const Graph> dataset) {
  if (dataset.empty()) {
    throw std::invalid_argument("estimate_marginals: empty dataset");
  }
  const ClassVocab& vocab = dataset.front().vocab();
  std::vector<double> node_counts(vocab.node_class_count, 0.0);
  std::vector<double> edge_counts(vocab.edge_class_count, 0.0);
  double total_nodes = 0.0;
  double total_pairs = 0.0;
  for (const Graph& g : dataset) {
    if (!(g.vocab() == vocab)) {
      throw std::invalid_argument("estimate_marginals: mixed vocabularies");
    }
    for (int i = 0; i < g.size(); ++i) {
      node_counts[g.node_class(i)] += 1.0;
      for (int j = i + 1; j < g.size(); ++j) {
        edge_counts[g.edge_class(i, j)] += 1.0;
        total_pairs += 1.0;
      }
    }
    total_nodes += g.size();
  }
  if (total_nodes == 0.0) {
    throw std::invalid_argument("estimate_marginals: dataset has no nodes");
  }
  if (total_pairs == 0.0) {
    throw std::invalid_argument(
        "estimate_marginals: dataset has no node pairs");
  }
  Marginals m;
  m.node.resize(node_counts.size());
  m.edge.resize(edge_counts.size());
  for (std::size_t i = 0; i < node_counts.size(); ++i) {
    m.node[i] = node_counts[i] / total_nodes;
  }
  for (std::size_t i = 0; i < edge_counts.size(); ++i) {
    m.edge[i] = edge_counts[i] / total_pairs;
  }
  return m;
}

TransitionMatrices build_transitions(const Marginals& m) {
  m.validate();
  TransitionMatrices q;
  q.qx = zero_diagonal_rows(m.node, "build_transitions.qx");
  q.qe = zero_diagonal_rows(m.edge, "build_transitions.qe");
  return q;
}

std::vector<double> terminal_node_marginals(const Marginals& m) {
  m.validate();
  return terminal_from(m.node, "terminal_node_marginals");
}

std::vector<double> terminal_edge_marginals(const Marginals& m, double r) {
  m.validate();
  if (!(r > 0.0 && r <= 1.0)) {
    throw std::invalid_argument("terminal_edge_marginals: r must be in (0, 1]");
  }
  std::vector<double> swapped = terminal_from(m.edge, "terminal_edge_marginals");
  std::vector<double> out(swapped.size());
  for (std::size_t i = 0; i < out.size(); ++i) {
    out[i] = (1.0 - r) * m.edge[i] + r * swapped[i];
  }
  return out;
}

TerminalMarginals terminal_marginals(const Marginals& m, double r) {
  TerminalMarginals tm;
  tm.node = terminal_node_marginals(m);
  tm.edge = terminal_edge_marginals(m, r);
  return tm;
}

Graph resample_selected(const Graph& g0, const SelectionMask& mask,
                        const TransitionMatrices& q,
                        std::span<const double> node_draws,
                        std::span<const double> edge_draws) {
  mask.validate(g0.size());
  if (node_draws.size() != mask.nodes.size() ||
      edge_draws.size() != mask.edges.size()) {
    throw std::invalid_argument("resample_selected: draw count mismatch");
  }
  const ClassVocab& vocab = g0.vocab();
  if (static_cast<int>(q.qx.size()) != vocab.node_class_count ||
      static_cast<int>(q.qe.size()) != vocab.edge_class_count) {
    throw std::invalid_argument("resample_selected: transition size mismatch");
  }
  Graph g = g0;
  for (std::size_t s = 0; s < mask.nodes.size(); ++s) {
    int i = mask.nodes[s];
    g.set_node_class(
        i, categorical_from_unit(q.qx[g0.node_class(i)], node_draws[s]));
  }
  for (std::size_t s = 0; s < mask.edges.size(); ++s) {
    auto [i, j] = mask.edges[s];
    g.set_edge_class(
        i, j, categorical_from_unit(q.qe[g0.edge_class(i, j)], edge_draws[s]));
  }
  return g;
}

NoisedGraph forward_noise(const Graph& g0, int t, const ScheduleParams& params,
                          const TransitionMatrices& q, RngStream& rng,
                          EdgeScope scope) {
  if (params.n != g0.size()) {
    throw std::invalid_argument("forward_noise: schedule n != graph n");
  }
  int u = node_budget(t, params);
  int v = edge_budget(t, params);

  SelectionMask mask;
  mask.nodes = rng.sample_without_replacement(g0.size(), u);

  std::vector<std::pair<int, int>> pool;
  if (scope == EdgeScope::kInducedSubgraph) {
    pool = induced_pairs(mask.nodes);
  } else {
    for (int i = 0; i < g0.size(); ++i) {
      for (int j = i + 1; j < g0.size(); ++j) pool.emplace_back(i, j);
    }
  }
  if (v > static_cast<int>(pool.size())) {
    throw std::logic_error("forward_noise: edge budget exceeds pair pool");
  }
  std::vector<int> picked =
      rng.sample_without_replacement(static_cast<int>(pool.size()), v);
  mask.edges.reserve(picked.size());
  for (int idx : picked) mask.edges.push_back(pool[idx]);

  std::vector<double> node_draws(mask.nodes.size());
  for (double& d : node_draws) d = rng.next_unit();
  std::vector<double> edge_draws(mask.edges.size());
  for (double& d : edge_draws) d = rng.next_unit();

  return {resample_selected(g0, mask, q, node_draws, edge_draws),
          std::move(mask)};
}

}  // namespace dmol
