// SPDX-License-Identifier: Apache-2.0

#include "dmol/loss.hpp"

#include <cmath>
#include <cstddef>
#include <stdexcept>
#include <string>

namespace dmol {

namespace {

int argmax_lowest(const double* p, int k) {
  int best = 0;
  for (int c = 1; c < k; ++c) {
    if (p[c] > p[best]) best = c;
  }
  return best;
}

double clamped_nll(double p) {
  return -std::log(p < kLossProbFloor ? kLossProbFloor : p);
}

void check_shapes(const Prediction& pred, const Graph& g, const char* what) {
  if (pred.n != g.size() ||
      pred.node_class_count != g.vocab().node_class_count ||
      pred.edge_class_count != g.vocab().edge_class_count) {
    throw std::invalid_argument(std::string(what) + ": shape mismatch");
  }
}

}  // namespace

double Prediction::node_prob(int i, int c) const {
  return node_probs[static_cast<std::size_t>(i) * node_class_count + c];
}

double Prediction::edge_prob(int i, int j, int c) const {
  return edge_probs[(static_cast<std::size_t>(i) * n + j) * edge_class_count +
                    c];
}

double& Prediction::node_prob(int i, int c) {
  return node_probs[static_cast<std::size_t>(i) * node_class_count + c];
}

double& Prediction::edge_prob(int i, int j, int c) {
  return edge_probs[(static_cast<std::size_t>(i) * n + j) * edge_class_count +
                    c];
}

void Prediction::validate() const {
  if (n < 0 || node_class_count < 1 || edge_class_count < 2) {
    throw std::invalid_argument("Prediction: bad dimensions");
  }
  if (node_probs.size() != static_cast<std::size_t>(n) * node_class_count ||
      edge_probs.size() !=
          static_cast<std::size_t>(n) * n * edge_class_count) {
    throw std::invalid_argument("Prediction: storage size mismatch");
  }
  for (int i = 0; i < n; ++i) {
    double sum = 0.0;
    for (int c = 0; c < node_class_count; ++c) {
      double p = node_prob(i, c);
      if (!(p >= 0.0)) {
        throw std::invalid_argument("Prediction: negative node probability");
      }
      sum += p;
    }
    if (std::abs(sum - 1.0) > 1e-6) {
      throw std::invalid_argument("Prediction: node row does not sum to 1");
    }
  }
  for (int i = 0; i < n; ++i) {
    for (int j = 0; j < n; ++j) {
      double sum = 0.0;
      for (int c = 0; c < edge_class_count; ++c) {
        double p = edge_prob(i, j, c);
        if (!(p >= 0.0)) {
          throw std::invalid_argument("Prediction: negative edge probability");
        }
        if (p != edge_prob(j, i, c)) {
          throw std::invalid_argument("Prediction: edge rows not symmetric");
        }
        sum += p;
      }
      if (std::abs(sum - 1.0) > 1e-6) {
        throw std::invalid_argument("Prediction: edge row does not sum to 1");
      }
    }
  }
}

Prediction Prediction::one_hot(const Graph& g) {
  Prediction p;
  p.n = g.size();
  p.node_class_count = g.vocab().node_class_count;
  p.edge_class_count = g.vocab().edge_class_count;
  p.node_probs.assign(static_cast<std::size_t>(p.n) * p.node_class_count, 0.0);
  p.edge_probs.assign(static_cast<std::size_t>(p.n) * p.n * p.edge_class_count,
                      0.0);
  for (int i = 0; i < p.n; ++i) p.node_prob(i, g.node_class(i)) = 1.0;
  for (int i = 0; i < p.n; ++i) {
    for (int j = 0; j < p.n; ++j) p.edge_prob(i, j, g.edge_class(i, j)) = 1.0;
  }
  return p;
}

Graph Prediction::argmax_graph(const ClassVocab& vocab) const {
  if (vocab.node_class_count != node_class_count ||
      vocab.edge_class_count != edge_class_count) {
    throw std::invalid_argument("Prediction::argmax_graph: vocab mismatch");
  }
  Graph g(n, vocab);
  for (int i = 0; i < n; ++i) {
    g.set_node_class(
        i, argmax_lowest(&node_probs[static_cast<std::size_t>(i) *
                                     node_class_count],
                         node_class_count));
  }
  for (int i = 0; i < n; ++i) {
    for (int j = i + 1; j < n; ++j) {
      g.set_edge_class(
          i, j,
          argmax_lowest(&edge_probs[(static_cast<std::size_t>(i) * n + j) *
                                    edge_class_count],
                        edge_class_count));
    }
  }
  return g;
}

void LossWeights::validate() const {
  if (!(lambda1 >= 0.0) || !(lambda2 >= 0.0) || !(lambda3 >= 0.0) ||
      !std::isfinite(lambda1) || !std::isfinite(lambda2) ||
      !std::isfinite(lambda3)) {
    throw std::invalid_argument("LossWeights: weights must be finite and >= 0");
  }
}

double cross_entropy_loss(const Prediction& pred, const Graph& target,
                          const LossWeights& w) {
  check_shapes(pred, target, "cross_entropy_loss");
  w.validate();
  double node_term = 0.0;
  for (int i = 0; i < pred.n; ++i) {
    node_term += clamped_nll(pred.node_prob(i, target.node_class(i)));
  }
  double edge_term = 0.0;
  for (int i = 0; i < pred.n; ++i) {
    for (int j = 0; j < pred.n; ++j) {
      if (i == j) continue;
      edge_term += clamped_nll(pred.edge_prob(i, j, target.edge_class(i, j)));
    }
  }
  return node_term + w.lambda1 * edge_term;
}

double count_penalty_loss(const Prediction& pred, const Graph& reference,
                          const StepBudget& budget, const LossWeights& w) {
  check_shapes(pred, reference, "count_penalty_loss");
  w.validate();
  Graph guess = pred.argmax_graph(reference.vocab());
  double dn = hamming_nodes(guess, reference) - budget.n_nodes;
  double de = hamming_edges(guess, reference) - budget.n_edges;
  return w.lambda2 * dn * dn + w.lambda3 * de * de;
}

double soft_count_nodes(const Prediction& pred, const Graph& reference) {
  check_shapes(pred, reference, "soft_count_nodes");
  double d = 0.0;
  for (int i = 0; i < pred.n; ++i) {
    d += 1.0 - pred.node_prob(i, reference.node_class(i));
  }
  return d;
}

double soft_count_edges(const Prediction& pred, const Graph& reference) {
  check_shapes(pred, reference, "soft_count_edges");
  double d = 0.0;
  for (int i = 0; i < pred.n; ++i) {
    for (int j = i + 1; j < pred.n; ++j) {
      d += 1.0 - pred.edge_prob(i, j, reference.edge_class(i, j));
    }
  }
  return d;
}

double total_loss(const Prediction& pred, const Graph& clean,
                  const Graph& noisy, const StepBudget& budget,
                  const LossWeights& w, MseReference ref) {
  const Graph& reference = ref == MseReference::kNoisy ? noisy : clean;
  return cross_entropy_loss(pred, clean, w) +
         count_penalty_loss(pred, reference, budget, w);
}

Prediction apply_permutation(const Prediction& pred, const Permutation& p) {
  if (p.size() != pred.n) {
    throw std::invalid_argument("apply_permutation: size mismatch");
  }
  Prediction out = pred;
  for (int i = 0; i < pred.n; ++i) {
    for (int c = 0; c < pred.node_class_count; ++c) {
      out.node_prob(i, c) = pred.node_prob(p(i), c);
    }
    for (int j = 0; j < pred.n; ++j) {
      for (int c = 0; c < pred.edge_class_count; ++c) {
        out.edge_prob(i, j, c) = pred.edge_prob(p(i), p(j), c);
      }
    }
  }
  return out;
}

}  // namespace dmol
