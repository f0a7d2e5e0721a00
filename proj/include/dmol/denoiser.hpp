// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <array>
#include <memory>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "dmol/autograd.hpp"
#include "dmol/graph.hpp"
#include "dmol/loss.hpp"
#include "dmol/noise.hpp"
#include "dmol/rng.hpp"
#include "dmol/schedule.hpp"

namespace dmol {

// Structural input features. Per-node rows hold the degree count per bond
// class followed by simple-cycle participation counts for cycle lengths
// 3..6; the per-graph vector is the conditioning block (n/n_max, t/T, rx, re).
struct Features {
  int per_node_width = 0;
  std::vector<double> per_node;
  std::vector<double> per_graph;
};

/// Exact participation counts: entry [i][L-3] is the number of simple cycles
// of length L through node i in the bond-presence graph.
std::vector<std::array<int, 4>> cycle_participation(const Graph& g);

Features featurize(const Graph& g, const StepBudget& budget,
                   const ScheduleParams& params, int n_max);

struct DenoiserInput {
  Graph graph;
  int t = 0;
  Features features;
  double rx = 0.0;
  double re = 0.0;
};

DenoiserInput make_denoiser_input(const Graph& g, int t,
                                  const ScheduleParams& params, int n_max);

class Denoiser {
 public:
  virtual ~Denoiser() = default;
  virtual Prediction predict(const DenoiserInput& in) const = 0;
  // Reference width for the n/n_max conditioning feature.
  virtual int feature_n_max() const = 0;
};

// Test double that always predicts its stored clean graph one-hot. Lets the
// sampler and noise invariants be exercised independently of training.
class OracleDenoiser : public Denoiser {
 public:
  explicit OracleDenoiser(Graph clean);
  Prediction predict(const DenoiserInput& in) const override;
  int feature_n_max() const override;
  const Graph& clean() const { return clean_; }

 private:
  Graph clean_;
};

struct MpnnConfig {
  int layers = 2;
  int hidden = 32;
  int edge_hidden = 16;
  int n_max = 9;

  bool operator==(const MpnnConfig&) const = default;
};

struct ParamMatrix {
  std::string name;
  int rows = 0;
  int cols = 0;
  std::vector<double> data;

  bool operator==(const ParamMatrix&) const = default;
};

// Permutation-equivariant message-passing denoiser. Node states and
// unordered-pair edge states are co-updated per layer; the conditioning
// block is concatenated into every update. All pair-level inputs are
// orientation-symmetric, so edge outputs are symmetric by construction.
class MpnnDenoiser : public Denoiser {
 public:
  MpnnDenoiser(ClassVocab vocab, MpnnConfig cfg, RngStream init_rng);

  Prediction predict(const DenoiserInput& in) const override;
  int feature_n_max() const override { return cfg_.n_max; }

  const ClassVocab& vocab() const { return vocab_; }
  const MpnnConfig& config() const { return cfg_; }
  std::vector<ParamMatrix>& params() { return params_; }
  const std::vector<ParamMatrix>& params() const { return params_; }
  int parameter_count() const;

  struct TapeForward {
    int node_logits = -1;
    int edge_logits = -1;  // one row per unordered pair, i<j enumeration
    std::vector<std::pair<int, int>> pairs;
    std::vector<int> leaf_ids;  // aligned with params()
  };
  TapeForward build_forward(Tape& tape, const DenoiserInput& in) const;

 private:
  ClassVocab vocab_;
  MpnnConfig cfg_;
  std::vector<ParamMatrix> params_;
};

struct DivergenceError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct TrainConfig {
  int steps = 500;
  double learning_rate = 0.001;
  double momentum = 0.9;
  bool hard_count = false;
  MseReference mse_reference = MseReference::kNoisy;
  // Corruption edge pool; the whole-graph scope exists for ablation.
  EdgeScope edge_scope = EdgeScope::kInducedSubgraph;
  double divergence_threshold = 1e6;
  int validation_size = 8;
  int validation_interval = 25;
};

struct TrainResult {
  // Per-step objective with the exact (hard-count) penalty logged.
  std::vector<double> loss_trace;
  // Cross entropy on a corruption set frozen before training; entry 0 is the
  // pre-training value.
  std::vector<double> validation_trace;
};

struct TapeLossResult {
  double objective = 0.0;  // what gradients descend (soft penalty by default)
  double reported = 0.0;   // CE plus the exact hard-count penalty
  Prediction prediction;
};

// One differentiable loss evaluation. grads_out, when non-null, receives
// d(objective)/d(param) aligned with d.params(). hard_count drops the
// penalty from the objective (it is piecewise constant) but keeps it in the
// reported value.
TapeLossResult training_loss(const MpnnDenoiser& d, const Graph& clean,
                             const Graph& noisy, const StepBudget& budget,
                             const ScheduleParams& params,
                             const LossWeights& w, bool hard_count,
                             MseReference ref,
                             std::vector<std::vector<double>>* grads_out);

// Corruption-and-descent loop: each step draws a graph and a level t in
// [1, T], corrupts one-shot, and applies a momentum update. The schedule's
// (k, r, c) are reused per graph with T = k * n(graph). Throws
// DivergenceError when the objective exceeds the threshold or goes
// non-finite.
TrainResult train(MpnnDenoiser& d, std::span<const Graph> dataset,
                  const ScheduleParams& sched, const TransitionMatrices& q,
                  const LossWeights& w, const TrainConfig& cfg,
                  RngStream& rng);

}  // namespace dmol
