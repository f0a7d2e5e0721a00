// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <span>
#include <vector>

#include "dmol/graph.hpp"
#include "dmol/noise.hpp"
#include "dmol/rng.hpp"
#include "dmol/schedule.hpp"

namespace dmol {

// Knobs that morph the one-shot forward corruption into a DiGress-average
// emulation: a fixed step count, change budgets scaled by the marginal terms,
// whole-graph edge selection and class-weighted slot picking. All neutral
// knobs reproduce forward_noise exactly. When selection weights are present
// each slot changes independently at rate (1-abar)*w instead of drawing an
// exact budget; that keeps both closed forms (expected change count and class
// share of changes) exact rather than first-order.
struct DigressCompatConfig {
  ScheduleParams schedule;
  int fixed_T = 0;
  double node_scale = 1.0;
  double edge_scale_inv = 1.0;
  bool independent_edges = false;
  std::vector<double> selection_weights_node;  // per class; empty = uniform
  std::vector<double> selection_weights_edge;

  void validate() const;
  bool neutral() const;

  static DigressCompatConfig neutral_for(const ScheduleParams& params);
  // fixed T matched to the schedule, budgets scaled by sum p(1-p), edges from
  // all pairs, selection weighted by (1-p) of the slot's current class.
  static DigressCompatConfig digress_for(const ScheduleParams& params,
                                         const Marginals& m);
};

// alpha_bar * I + (1 - alpha_bar) * ones * m; every row sums to one.
std::vector<std::vector<double>> digress_transition(
    double alpha_bar, std::span<const double> m);

// 1 / sum_i p_i (1 - p_i): how many more steps the uniform-rate process
// needs per effective change. Strictly above 1 for any distribution.
double efficiency_ratio(std::span<const double> m);

// One corruption step under the compat knobs. clamp_warnings, when given,
// counts budgets that had to be clamped to the available pool.
Graph compat_forward(const Graph& g0, int t, const DigressCompatConfig& compat,
                     const TransitionMatrices& q, RngStream& rng,
                     int* clamp_warnings = nullptr);

struct HammingCurves {
  std::vector<double> dmol;     // E[node Hamming] at t = 0..schedule.T
  std::vector<double> digress;  // same, t = 0..fixed_T, via the cumulative
                                // transition applied to iid marginal graphs
};

HammingCurves hamming_curves(const Marginals& m, const ScheduleParams& params,
                             const DigressCompatConfig& compat, int trials,
                             RngStream& rng);

// Max |empirical - m| over classes and steps when node chains start at m and
// evolve by per-step transitions; the marginal is a fixed point.
double stationarity_check(const Marginals& m, int steps, int trials,
                          RngStream& rng);

// C(changed, 2) / C(n, 2): share of all pairs reachable inside the induced
// subgraph of the changed nodes.
double edge_correction(int changed, int n);

}  // namespace dmol
