// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstdint>
#include <map>
#include <span>
#include <vector>

#include "dmol/denoiser.hpp"
#include "dmol/graph.hpp"
#include "dmol/loss.hpp"
#include "dmol/noise.hpp"
#include "dmol/rng.hpp"
#include "dmol/schedule.hpp"

namespace dmol {

// Everything generation needs besides the denoiser itself; populated from a
// checkpoint. The schedule's (k, r, c) are reused per sample with T = k * n.
struct SampleConfig {
  ClassVocab vocab;
  std::map<int, double> node_count_distribution;  // n -> probability
  int batch = 1;
  ScheduleParams schedule;
  Marginals marginals;
  std::uint64_t seed = 0;

  void validate() const;
};

// Empirical node-count frequencies of a dataset.
std::map<int, double> node_count_distribution(std::span<const Graph> dataset);

// Fully-noised starting point: node classes i.i.d. from tm.node, upper
// triangle edges i.i.d. from tm.edge mirrored down, diagonal no-edge.
Graph sample_terminal(int n, const ClassVocab& vocab,
                      const TerminalMarginals& tm, RngStream& rng);

// Deterministic core of prediction sampling: one unit draw per node, one per
// unordered pair in (i<j) lexicographic order, each mapped through the
// matching row of the prediction.
Graph sample_from_prediction(const Prediction& p, const ClassVocab& vocab,
                             std::span<const double> node_units,
                             std::span<const double> edge_units);

// One reverse move: predict the clean graph from g_t, sample a candidate
// from the prediction, then re-corrupt it one level down with the forward
// process. At t = 1 the corruption budgets are zero and the candidate is
// returned as-is.
Graph reverse_step(const Denoiser& d, const Graph& g_t, int t,
                   const ScheduleParams& params, const TransitionMatrices& q,
                   RngStream& rng);

// Full generation loop over a batch; samples are independent given derived
// per-sample streams, so the batch runs in parallel and is still
// deterministic for a fixed incoming stream.
std::vector<Graph> sample(const Denoiser& d, const SampleConfig& cfg,
                          RngStream& rng);

}  // namespace dmol
