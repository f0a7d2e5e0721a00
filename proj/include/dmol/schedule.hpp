// SPDX-License-Identifier: Apache-2.0

#pragma once

namespace dmol {

// Cosine-schedule parameters. T is always k*n.
struct ScheduleParams {
  int k = 2;
  double r = 0.2;
  double c = 0.008;
  int n = 0;
  int T = 0;

  static ScheduleParams for_graph(int n, int k = 2, double r = 0.2,
                                  double c = 0.008);
  void validate() const;
  bool operator==(const ScheduleParams&) const = default;
};

// Derived per-step quantities: alpha level, node/edge perturbation budgets
// and the conditioning ratios fed to the denoiser.
struct StepBudget {
  int t = 0;
  double alpha = 0.0;
  int n_nodes = 0;
  int n_edges = 0;
  double rx = 0.0;
  double re = 0.0;
};

double alpha(int t, const ScheduleParams& params);
int node_budget(int t, const ScheduleParams& params);
int edge_budget(int t, const ScheduleParams& params);
StepBudget step_budget(int t, const ScheduleParams& params);

}  // namespace dmol
