// SPDX-License-Identifier: Apache-2.0

#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <vector>

#include "dmol/autograd.hpp"
#include "dmol/rng.hpp"

using dmol::RngStream;
using dmol::Tape;

namespace {

std::vector<double> random_vec(RngStream& rng, int count, double lo,
                               double hi) {
  std::vector<double> v(count);
  for (double& x : v) x = lo + (hi - lo) * rng.next_unit();
  return v;
}

struct Built {
  int obj = -1;
  std::vector<int> leaves;
};

// One expression touching every op, ending in a scalar.
Built build_composite(Tape& tape, const std::vector<double>& a,
                      const std::vector<double>& b,
                      const std::vector<double>& bias) {
  Built out;
  int la = tape.leaf(a, 3, 4);
  int lb = tape.leaf(b, 4, 2);
  int lbias = tape.leaf(bias, 1, 2);
  out.leaves = {la, lb, lbias};
  int h = tape.tanh_activation(
      tape.add_row_broadcast(tape.matmul(la, lb), lbias));        // 3x2
  int gathered = tape.gather_rows(h, {2, 0, 1, 0});               // 4x2
  int scattered = tape.scatter_add_rows(gathered, {1, 0, 1, 2}, 3);
  int mixed = tape.mul(scattered, tape.scale(h, 0.5));
  std::vector<int> parts = {h, mixed};
  int cat = tape.concat_cols(parts);                              // 3x4
  int ce = tape.ce_from_logits(cat, {1, 3, 0});
  int pick = tape.pick_sum(tape.softmax_rows(cat), {0, 2, 1});
  out.obj = tape.add(ce, tape.scale(pick, 0.25));
  return out;
}

double rel_gap(double x, double y) {
  return std::abs(x - y) / std::max({std::abs(x), std::abs(y), 1.0});
}

}  // namespace

TEST_CASE("matmul and broadcast forward values") {
  Tape tape;
  int a = tape.constant({1, 2, 3, 4}, 2, 2);
  int b = tape.constant({5, 6, 7, 8}, 2, 2);
  int c = tape.matmul(a, b);
  std::span<const double> v = tape.value(c);
  CHECK(v[0] == 19.0);
  CHECK(v[1] == 22.0);
  CHECK(v[2] == 43.0);
  CHECK(v[3] == 50.0);

  int bias = tape.constant({10, 20}, 1, 2);
  std::span<const double> w = tape.value(tape.add_row_broadcast(c, bias));
  CHECK(w[0] == 29.0);
  CHECK(w[3] == 70.0);
}

TEST_CASE("gather and scatter forward values") {
  Tape tape;
  int x = tape.constant({1, 2, 3, 4, 5, 6}, 3, 2);
  int g = tape.gather_rows(x, {2, 2, 0});
  std::span<const double> gv = tape.value(g);
  CHECK(gv[0] == 5.0);
  CHECK(gv[1] == 6.0);
  CHECK(gv[2] == 5.0);
  CHECK(gv[4] == 1.0);

  int s = tape.scatter_add_rows(g, {0, 1, 0}, 2);
  std::span<const double> sv = tape.value(s);
  CHECK(sv[0] == 6.0);  // rows 0 and 2 of g land on output row 0
  CHECK(sv[1] == 8.0);
  CHECK(sv[2] == 5.0);
  CHECK(sv[3] == 6.0);
}

TEST_CASE("softmax rows normalize and ce matches a manual logsumexp") {
  RngStream rng(77);
  std::vector<double> logits = random_vec(rng, 20, -3.0, 3.0);
  std::vector<int> targets = {1, 3, 0, 2, 3};
  Tape tape;
  int l = tape.leaf(logits, 5, 4);
  std::span<const double> probs = tape.value(tape.softmax_rows(l));
  for (int r = 0; r < 5; ++r) {
    double sum = 0.0;
    for (int c = 0; c < 4; ++c) sum += probs[r * 4 + c];
    CHECK(std::abs(sum - 1.0) < 1e-12);
  }

  double manual = 0.0;
  for (int r = 0; r < 5; ++r) {
    double mx = *std::max_element(logits.begin() + r * 4,
                                  logits.begin() + (r + 1) * 4);
    double acc = 0.0;
    for (int c = 0; c < 4; ++c) acc += std::exp(logits[r * 4 + c] - mx);
    manual += std::log(acc) + mx - logits[r * 4 + targets[r]];
  }
  double ce = tape.scalar(tape.ce_from_logits(l, targets));
  CHECK(std::abs(ce - manual) < 1e-12);

  double from_probs = 0.0;
  for (int r = 0; r < 5; ++r) from_probs += -std::log(probs[r * 4 + targets[r]]);
  CHECK(std::abs(ce - from_probs) < 1e-9);
}

TEST_CASE("ce stays finite for extreme logits") {
  Tape tape;
  int l = tape.constant({1000.0, 0.0, -1000.0}, 1, 3);
  double ce = tape.scalar(tape.ce_from_logits(l, {0}));
  CHECK(std::isfinite(ce));
  CHECK(std::abs(ce) < 1e-9);
  double worst = tape.scalar(tape.ce_from_logits(l, {2}));
  CHECK(std::isfinite(worst));
  CHECK(worst == doctest::Approx(2000.0));
}

TEST_CASE("ce gradient equals softmax minus one-hot") {
  RngStream rng(11);
  std::vector<double> logits = random_vec(rng, 12, -2.0, 2.0);
  std::vector<int> targets = {2, 0, 3};
  Tape tape;
  int l = tape.leaf(logits, 3, 4);
  int probs = tape.softmax_rows(l);
  int ce = tape.ce_from_logits(l, targets);
  std::vector<double> p(tape.value(probs).begin(), tape.value(probs).end());
  tape.backward(ce);
  std::span<const double> g = tape.grad(l);
  for (int r = 0; r < 3; ++r) {
    for (int c = 0; c < 4; ++c) {
      double expected = p[r * 4 + c] - (c == targets[r] ? 1.0 : 0.0);
      CHECK(std::abs(g[r * 4 + c] - expected) < 1e-12);
    }
  }
}

TEST_CASE("composite gradients match central differences") {
  RngStream rng(123);
  std::vector<double> a = random_vec(rng, 12, -1.0, 1.0);
  std::vector<double> b = random_vec(rng, 8, -1.0, 1.0);
  std::vector<double> bias = random_vec(rng, 2, -0.5, 0.5);

  Tape tape;
  Built built = build_composite(tape, a, b, bias);
  tape.backward(built.obj);
  std::vector<std::vector<double>> analytic;
  for (int id : built.leaves) {
    analytic.emplace_back(tape.grad(id).begin(), tape.grad(id).end());
  }

  std::vector<std::vector<double>*> inputs = {&a, &b, &bias};
  const double h = 1e-5;
  for (std::size_t k = 0; k < inputs.size(); ++k) {
    for (std::size_t i = 0; i < inputs[k]->size(); ++i) {
      double saved = (*inputs[k])[i];
      (*inputs[k])[i] = saved + h;
      Tape tp;
      double fp = tp.scalar(build_composite(tp, a, b, bias).obj);
      (*inputs[k])[i] = saved - h;
      Tape tm;
      double fm = tm.scalar(build_composite(tm, a, b, bias).obj);
      (*inputs[k])[i] = saved;
      double fd = (fp - fm) / (2.0 * h);
      CHECK(rel_gap(fd, analytic[k][i]) < 1e-6);
    }
  }
}

TEST_CASE("empty row blocks flow through") {
  Tape tape;
  int x = tape.constant({}, 0, 3);
  int w = tape.leaf(std::vector<double>{1, 2, 3, 4, 5, 6}, 3, 2);
  int y = tape.matmul(x, w);
  CHECK(tape.rows(y) == 0);
  CHECK(tape.cols(y) == 2);
  int ce = tape.ce_from_logits(y, {});
  CHECK(tape.scalar(ce) == 0.0);
  tape.backward(ce);
  for (double g : tape.grad(w)) CHECK(g == 0.0);
}

TEST_CASE("backward rejects non-scalar seeds and repeated use works") {
  Tape tape;
  int x = tape.constant({1, 2, 3, 4}, 2, 2);
  CHECK_THROWS_AS(tape.backward(x), std::invalid_argument);

  std::vector<double> data = {0.5, -0.25};
  int leaf = tape.leaf(data, 1, 2);
  int obj = tape.pick_sum(tape.softmax_rows(leaf), {0});
  tape.backward(obj);
  std::vector<double> first(tape.grad(leaf).begin(), tape.grad(leaf).end());
  tape.backward(obj);
  std::vector<double> second(tape.grad(leaf).begin(), tape.grad(leaf).end());
  CHECK(first == second);
}
