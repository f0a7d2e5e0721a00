// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <span>
#include <vector>

#include "dmol/graph.hpp"
#include "dmol/rng.hpp"
#include "dmol/schedule.hpp"

namespace dmol {

// Training-corpus class frequencies. Node entries are per-node counts; edge
// entries are per-unordered-pair counts with the no-edge class included.
struct Marginals {
  std::vector<double> node;
  std::vector<double> edge;

  void validate() const;
  bool operator==(const Marginals&) const = default;
};

// Zero-diagonal row-stochastic transition matrices: a selected slot always
// leaves its current class, landing on class j with probability proportional
// to the marginal of j.
struct TransitionMatrices {
  std::vector<std::vector<double>> qx;
  std::vector<std::vector<double>> qe;

  void validate() const;
  bool operator==(const TransitionMatrices&) const = default;
};

// Class distributions of the fully-noised graph at t = T.
struct TerminalMarginals {
  std::vector<double> node;
  std::vector<double> edge;
};

Marginals estimate_marginals(std::span<const Graph> dataset);

TransitionMatrices build_transitions(const Marginals& m);

std::vector<double> terminal_node_marginals(const Marginals& m);
std::vector<double> terminal_edge_marginals(const Marginals& m, double r);
TerminalMarginals terminal_marginals(const Marginals& m, double r);

// Pair pool the edge selection draws from. The induced-subgraph scope is the
// model's own behavior; the whole-graph scope exists for ablation.
enum class EdgeScope { kInducedSubgraph, kWholeGraph };

struct NoisedGraph {
  Graph graph;
  SelectionMask mask;
};

// Deterministic core of the corruption: rewrites exactly the masked slots of
// g0, mapping one unit draw per slot through the zero-diagonal transition row
// of that slot's current class. Every masked slot changes class.
Graph resample_selected(const Graph& g0, const SelectionMask& mask,
                        const TransitionMatrices& q,
                        std::span<const double> node_draws,
                        std::span<const double> edge_draws);

// One-shot corruption of g0 to noise level t: selects N(t) nodes uniformly
// without replacement, M(t) pairs uniformly from the scope's pool, then
// resamples the selected slots.
NoisedGraph forward_noise(const Graph& g0, int t, const ScheduleParams& params,
                          const TransitionMatrices& q, RngStream& rng,
                          EdgeScope scope = EdgeScope::kInducedSubgraph);

}  // namespace dmol
