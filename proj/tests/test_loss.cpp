// SPDX-License-Identifier: Apache-2.0

#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <vector>

#include "dmol/graph.hpp"
#include "dmol/loss.hpp"
#include "dmol/noise.hpp"
#include "dmol/rng.hpp"
#include "dmol/schedule.hpp"

using dmol::ClassVocab;
using dmol::Graph;
using dmol::LossWeights;
using dmol::MseReference;
using dmol::Permutation;
using dmol::Prediction;
using dmol::RngStream;
using dmol::ScheduleParams;
using dmol::StepBudget;

namespace {

const ClassVocab kVocab{4, 3, 0};

Graph random_graph(int n, RngStream& rng, const ClassVocab& vocab = kVocab) {
  Graph g(n, vocab);
  for (int i = 0; i < n; ++i) {
    g.set_node_class(i, static_cast<int>(rng.next_below(vocab.node_class_count)));
  }
  for (int i = 0; i < n; ++i) {
    for (int j = i + 1; j < n; ++j) {
      g.set_edge_class(i, j,
                       static_cast<int>(rng.next_below(vocab.edge_class_count)));
    }
  }
  return g;
}

// Dirichlet-free random rows: positive entries normalized to 1.
Prediction random_prediction(int n, RngStream& rng,
                             const ClassVocab& vocab = kVocab) {
  Prediction p;
  p.n = n;
  p.node_class_count = vocab.node_class_count;
  p.edge_class_count = vocab.edge_class_count;
  p.node_probs.assign(static_cast<std::size_t>(n) * p.node_class_count, 0.0);
  p.edge_probs.assign(static_cast<std::size_t>(n) * n * p.edge_class_count, 0.0);
  for (int i = 0; i < n; ++i) {
    double sum = 0.0;
    for (int c = 0; c < p.node_class_count; ++c) {
      double v = 0.05 + rng.next_unit();
      p.node_prob(i, c) = v;
      sum += v;
    }
    for (int c = 0; c < p.node_class_count; ++c) p.node_prob(i, c) /= sum;
  }
  for (int i = 0; i < n; ++i) {
    for (int j = i; j < n; ++j) {
      double sum = 0.0;
      std::vector<double> row(p.edge_class_count);
      for (int c = 0; c < p.edge_class_count; ++c) {
        row[c] = 0.05 + rng.next_unit();
        sum += row[c];
      }
      for (int c = 0; c < p.edge_class_count; ++c) {
        p.edge_prob(i, j, c) = row[c] / sum;
        p.edge_prob(j, i, c) = row[c] / sum;
      }
    }
  }
  return p;
}

}  // namespace

TEST_CASE("prediction validation") {
  RngStream rng(3);
  Prediction p = random_prediction(5, rng);
  CHECK_NOTHROW(p.validate());
  Prediction broken = p;
  broken.node_prob(0, 0) += 0.1;
  CHECK_THROWS(broken.validate());
  Prediction asym = p;
  asym.edge_prob(0, 1, 1) += 0.01;
  asym.edge_prob(0, 1, 2) -= 0.01;
  CHECK_THROWS(asym.validate());
}

TEST_CASE("one-hot prediction of the target has zero cross entropy") {
  RngStream rng(5);
  Graph g = random_graph(6, rng);
  Prediction p = Prediction::one_hot(g);
  CHECK_NOTHROW(p.validate());
  LossWeights w;
  CHECK(dmol::cross_entropy_loss(p, g, w) == doctest::Approx(0.0));
}

TEST_CASE("uniform single-node prediction scores log a") {
  ClassVocab vocab{4, 2, 0};
  Graph g(1, vocab);
  g.set_node_class(0, 2);
  Prediction p;
  p.n = 1;
  p.node_class_count = 4;
  p.edge_class_count = 2;
  p.node_probs = {0.25, 0.25, 0.25, 0.25};
  p.edge_probs = {1.0, 0.0};  // diagonal row only; excluded from CE
  LossWeights w;
  CHECK(dmol::cross_entropy_loss(p, g, w) ==
        doctest::Approx(std::log(4.0)).epsilon(1e-12));
}

TEST_CASE("cross entropy matches a scalar recomputation") {
  RngStream rng(7);
  Graph g = random_graph(7, rng);
  Prediction p = random_prediction(7, rng);
  LossWeights w;
  w.lambda1 = 5.0;
  double expect = 0.0;
  for (int i = 0; i < 7; ++i) {
    expect += -std::log(p.node_prob(i, g.node_class(i)));
  }
  for (int i = 0; i < 7; ++i) {
    for (int j = 0; j < 7; ++j) {
      if (i != j) {
        expect += 5.0 * -std::log(p.edge_prob(i, j, g.edge_class(i, j)));
      }
    }
  }
  CHECK(dmol::cross_entropy_loss(p, g, w) ==
        doctest::Approx(expect).epsilon(1e-12));
}

TEST_CASE("zero predicted probability is clamped, not infinite") {
  ClassVocab vocab{2, 2, 0};
  Graph g(1, vocab);
  g.set_node_class(0, 1);
  Prediction p;
  p.n = 1;
  p.node_class_count = 2;
  p.edge_class_count = 2;
  p.node_probs = {1.0, 0.0};
  p.edge_probs = {1.0, 0.0};
  LossWeights w;
  double loss = dmol::cross_entropy_loss(p, g, w);
  CHECK(std::isfinite(loss));
  CHECK(loss == doctest::Approx(-std::log(1e-12)));
}

TEST_CASE("count penalty hand values") {
  RngStream rng(11);
  Graph ref = random_graph(6, rng);
  LossWeights w;
  w.lambda2 = 1.0;
  w.lambda3 = 1.0;

  StepBudget zero;
  CHECK(dmol::count_penalty_loss(Prediction::one_hot(ref), ref, zero, w) ==
        doctest::Approx(0.0));

  // Argmax differs from the reference at exactly 3 nodes, budget 3 -> 0.
  Graph moved = ref;
  for (int i = 0; i < 3; ++i) {
    moved.set_node_class(i, (ref.node_class(i) + 1) % 4);
  }
  StepBudget b3;
  b3.n_nodes = 3;
  b3.n_edges = 0;
  CHECK(dmol::count_penalty_loss(Prediction::one_hot(moved), ref, b3, w) ==
        doctest::Approx(0.0));

  // D_nodes = 2, target 5 -> (2-5)^2 = 9.
  Graph two = ref;
  two.set_node_class(0, (ref.node_class(0) + 1) % 4);
  two.set_node_class(1, (ref.node_class(1) + 1) % 4);
  StepBudget b5;
  b5.n_nodes = 5;
  b5.n_edges = 0;
  CHECK(dmol::count_penalty_loss(Prediction::one_hot(two), ref, b5, w) ==
        doctest::Approx(9.0));
}

TEST_CASE("count penalty sees only the argmax") {
  ClassVocab vocab{3, 2, 0};
  Graph ref(2, vocab);
  Prediction p = Prediction::one_hot(ref);
  StepBudget b;
  b.n_nodes = 1;
  LossWeights w;
  double before = dmol::count_penalty_loss(p, ref, b, w);
  // Shuffle sub-argmax mass; the argmax class keeps strictly more.
  p.node_probs = {0.6, 0.3, 0.1, 0.6, 0.1, 0.3};
  double after = dmol::count_penalty_loss(p, ref, b, w);
  CHECK(before == after);
}

TEST_CASE("argmax ties break toward the lowest class index") {
  ClassVocab vocab{3, 2, 0};
  Prediction p;
  p.n = 1;
  p.node_class_count = 3;
  p.edge_class_count = 2;
  p.node_probs = {0.4, 0.4, 0.2};
  p.edge_probs = {1.0, 0.0};
  Graph g = p.argmax_graph(vocab);
  CHECK(g.node_class(0) == 0);
}

TEST_CASE("soft counts equal expected Hamming distances") {
  RngStream rng(13);
  Graph ref = random_graph(5, rng);
  Prediction p = random_prediction(5, rng);
  double dn = 0.0, de = 0.0;
  for (int i = 0; i < 5; ++i) dn += 1.0 - p.node_prob(i, ref.node_class(i));
  for (int i = 0; i < 5; ++i) {
    for (int j = i + 1; j < 5; ++j) {
      de += 1.0 - p.edge_prob(i, j, ref.edge_class(i, j));
    }
  }
  CHECK(dmol::soft_count_nodes(p, ref) == doctest::Approx(dn).epsilon(1e-12));
  CHECK(dmol::soft_count_edges(p, ref) == doctest::Approx(de).epsilon(1e-12));
  CHECK(dmol::soft_count_nodes(Prediction::one_hot(ref), ref) ==
        doctest::Approx(0.0));
}

TEST_CASE("total loss composes its parts and picks the reference") {
  RngStream rng(17);
  Graph clean = random_graph(6, rng);
  Graph noisy = random_graph(6, rng);
  Prediction p = random_prediction(6, rng);
  StepBudget b;
  b.n_nodes = 2;
  b.n_edges = 1;
  LossWeights w;
  CHECK(dmol::total_loss(p, clean, noisy, b, w) ==
        doctest::Approx(dmol::cross_entropy_loss(p, clean, w) +
                        dmol::count_penalty_loss(p, noisy, b, w)));
  CHECK(dmol::total_loss(p, clean, noisy, b, w, MseReference::kClean) ==
        doctest::Approx(dmol::cross_entropy_loss(p, clean, w) +
                        dmol::count_penalty_loss(p, clean, b, w)));
}

TEST_CASE("perfect prediction with zero budgets has zero total loss") {
  RngStream rng(19);
  Graph g = random_graph(4, rng);
  StepBudget b;
  LossWeights w;
  CHECK(dmol::total_loss(Prediction::one_hot(g), g, g, b, w) ==
        doctest::Approx(0.0));
}

TEST_CASE("total loss is permutation invariant") {
  RngStream rng(23);
  for (int trial = 0; trial < 200; ++trial) {
    int n = 3 + static_cast<int>(rng.next_below(5));
    Graph clean = random_graph(n, rng);
    Graph noisy = random_graph(n, rng);
    Prediction p = random_prediction(n, rng);
    Permutation perm = Permutation::random(n, rng);
    StepBudget b;
    b.n_nodes = static_cast<int>(rng.next_below(n + 1));
    b.n_edges = static_cast<int>(rng.next_below(3));
    LossWeights w;
    double base = dmol::total_loss(p, clean, noisy, b, w);
    double permuted = dmol::total_loss(
        apply_permutation(p, perm), apply_permutation(clean, perm),
        apply_permutation(noisy, perm), b, w);
    CHECK(permuted == doctest::Approx(base).epsilon(1e-9));
  }
}

TEST_CASE("loss weights validate") {
  LossWeights w;
  CHECK_NOTHROW(w.validate());
  w.lambda2 = -1.0;
  CHECK_THROWS(w.validate());
}
