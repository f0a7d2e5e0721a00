// SPDX-License-Identifier: Apache-2.0

#include "dmol/schedule.hpp"

#include <cmath>
#include <numbers>
#include <stdexcept>

namespace dmol {

namespace {

// Budgets are real-valued formulas floored to integers. A tiny nudge keeps
// values that are integral in exact arithmetic (eg 0.2*15 = 3) from landing
// just below the integer in doubles and flooring one step too low. The nudge
// cannot push a budget past its cap: caps are attained only when the exact
// value is itself the cap.
int floor_budget(double x) { return static_cast<int>(std::floor(x + 1e-9)); }

void check_step(int t, const ScheduleParams& params) {
  params.validate();
  if (t < 0 || t > params.T) {
    throw std::out_of_range("schedule: step index out of [0, T]");
  }
}

}  // namespace

ScheduleParams ScheduleParams::for_graph(int n, int k, double r, double c) {
  ScheduleParams p;
  p.k = k;
  p.r = r;
  p.c = c;
  p.n = n;
  p.T = k * n;
  p.validate();
  return p;
}

void ScheduleParams::validate() const {
  if (k < 1) throw std::invalid_argument("ScheduleParams: k must be >= 1");
  if (!(r > 0.0 && r <= 1.0)) {
    throw std::invalid_argument("ScheduleParams: r must be in (0, 1]");
  }
  if (!(c > 0.0)) throw std::invalid_argument("ScheduleParams: c must be > 0");
  if (n < 1) throw std::invalid_argument("ScheduleParams: n must be >= 1");
  if (T != k * n) throw std::invalid_argument("ScheduleParams: T must equal k*n");
}

double alpha(int t, const ScheduleParams& params) {
  check_step(t, params);
  if (t == params.T) return 0.0;  // cos(pi/2) is not exactly zero in doubles
  double frac = static_cast<double>(t) / params.T;
  double x = std::cos(0.5 * std::numbers::pi * (frac + params.c) / (1.0 + params.c));
  return x * x;
}

int node_budget(int t, const ScheduleParams& params) {
  double a = alpha(t, params);
  return floor_budget((1.0 - a) * params.n);
}

int edge_budget(int t, const ScheduleParams& params) {
  double a = alpha(t, params);
  int u = node_budget(t, params);
  return floor_budget((1.0 - a) * u * (u - 1) * 0.5 * params.r);
}

StepBudget step_budget(int t, const ScheduleParams& params) {
  StepBudget b;
  b.t = t;
  b.alpha = alpha(t, params);
  b.n_nodes = node_budget(t, params);
  b.n_edges = edge_budget(t, params);
  b.rx = static_cast<double>(b.n_nodes) / params.n;
  b.re = params.n < 2 ? 0.0
                      : b.n_edges / (0.5 * params.n * (params.n - 1));
  return b;
}

}  // namespace dmol
