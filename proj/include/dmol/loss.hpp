// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <vector>

#include "dmol/graph.hpp"
#include "dmol/schedule.hpp"

namespace dmol {

// Per-node and per-pair class distributions emitted by a denoiser. Stored
// densely: node_probs is n*a row-major, edge_probs is n*n*b row-major and
// symmetric in (i, j). Diagonal rows are kept valid (one-hot no-edge by
// producers) so every row is checkable the same way.
struct Prediction {
  int n = 0;
  int node_class_count = 0;
  int edge_class_count = 0;
  std::vector<double> node_probs;
  std::vector<double> edge_probs;

  double node_prob(int i, int c) const;
  double edge_prob(int i, int j, int c) const;
  double& node_prob(int i, int c);
  double& edge_prob(int i, int j, int c);

  void validate() const;

  // One-hot prediction of a graph; the exact fixed point of the loss.
  static Prediction one_hot(const Graph& g);

  // Per-slot argmax with ties broken toward the lowest class index.
  Graph argmax_graph(const ClassVocab& vocab) const;
};

struct LossWeights {
  double lambda1 = 5.0;
  double lambda2 = 1.0;
  double lambda3 = 1.0;

  void validate() const;
};

// Which graph the count-penalty Hamming distances are measured against.
enum class MseReference { kNoisy, kClean };

// Probabilities are clamped here before log so adversarial zeros yield a
// large finite loss instead of infinity.
inline constexpr double kLossProbFloor = 1e-12;

// Node CE over all nodes plus lambda1 times edge CE over ordered pairs
// i != j (each unordered pair counted twice, diagonal excluded).
double cross_entropy_loss(const Prediction& pred, const Graph& target,
                          const LossWeights& w);

// lambda2*(D_nodes - N(t))^2 + lambda3*(D_edges - M(t))^2 where D_* are
// Hamming distances between the argmax graph and the reference.
double count_penalty_loss(const Prediction& pred, const Graph& reference,
                          const StepBudget& budget, const LossWeights& w);

// Differentiable stand-ins for the hard counts: sum over slots of one minus
// the probability mass on the reference class. Equal to the expected Hamming
// distance if slots were sampled independently from the prediction.
double soft_count_nodes(const Prediction& pred, const Graph& reference);
double soft_count_edges(const Prediction& pred, const Graph& reference);

double total_loss(const Prediction& pred, const Graph& clean,
                  const Graph& noisy, const StepBudget& budget,
                  const LossWeights& w,
                  MseReference ref = MseReference::kNoisy);

// Same index convention as the graph overload: output slot i carries input
// slot p(i).
Prediction apply_permutation(const Prediction& pred, const Permutation& p);

}  // namespace dmol
