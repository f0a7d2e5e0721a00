// SPDX-License-Identifier: Apache-2.0

#include "dmol/analysis.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <string>

#include "dmol/parallel.hpp"

namespace dmol {
namespace {

// alpha(t) over an arbitrary fixed step count: k=1 with n=T gives the same
// cosine form and endpoint handling as the graph-sized schedule.
ScheduleParams synthetic_schedule(int fixed_T, double r, double c) {
  return ScheduleParams::for_graph(fixed_T, 1, r, c);
}

void check_probs(std::span<const double> m, const char* who) {
  if (m.empty()) throw std::invalid_argument(std::string(who) + ": empty");
  double sum = 0.0;
  for (double p : m) {
    if (p < 0.0 || p > 1.0)
      throw std::invalid_argument(std::string(who) + ": entry outside [0,1]");
    sum += p;
  }
  if (std::abs(sum - 1.0) > 1e-9)
    throw std::invalid_argument(std::string(who) + ": does not sum to 1");
}

// Rounds so the expectation equals x; always consumes one draw.
int stochastic_round(double x, RngStream& rng) {
  double f = std::floor(x + 1e-9);
  double frac = x - f;
  double u = rng.next_unit();
  int base = static_cast<int>(f);
  return (frac > 1e-9 && u < frac) ? base + 1 : base;
}

// Cumulative retention normalized so the chain starts noise-free.
double alpha_bar(int t, const ScheduleParams& synth) {
  return std::min(1.0, alpha(t, synth) / alpha(0, synth));
}

}  // namespace

void DigressCompatConfig::validate() const {
  schedule.validate();
  if (fixed_T < 1)
    throw std::invalid_argument("compat config: fixed_T below 1");
  if (!(node_scale > 0.0) || node_scale > 1.0)
    throw std::invalid_argument("compat config: node_scale outside (0,1]");
  if (!(edge_scale_inv > 0.0))
    throw std::invalid_argument("compat config: edge_scale_inv not positive");
  for (const auto* w : {&selection_weights_node, &selection_weights_edge}) {
    if (w->empty()) continue;
    double sum = 0.0;
    for (double x : *w) {
      if (x < 0.0)
        throw std::invalid_argument("compat config: negative weight");
      sum += x;
    }
    if (!(sum > 0.0))
      throw std::invalid_argument("compat config: all weights zero");
  }
}

bool DigressCompatConfig::neutral() const {
  return fixed_T == schedule.T && node_scale == 1.0 &&
         edge_scale_inv == 1.0 && !independent_edges &&
         selection_weights_node.empty() && selection_weights_edge.empty();
}

DigressCompatConfig DigressCompatConfig::neutral_for(
    const ScheduleParams& params) {
  DigressCompatConfig cfg;
  cfg.schedule = params;
  cfg.fixed_T = params.T;
  return cfg;
}

DigressCompatConfig DigressCompatConfig::digress_for(
    const ScheduleParams& params, const Marginals& m) {
  m.validate();
  DigressCompatConfig cfg;
  cfg.schedule = params;
  cfg.fixed_T = params.T;
  cfg.node_scale = 0.0;
  for (double p : m.node) cfg.node_scale += p * (1.0 - p);
  double edge_sum = 0.0;
  for (double p : m.edge) edge_sum += p * (1.0 - p);
  cfg.edge_scale_inv = edge_sum / params.r;
  cfg.independent_edges = true;
  for (double p : m.node) cfg.selection_weights_node.push_back(1.0 - p);
  for (double p : m.edge) cfg.selection_weights_edge.push_back(1.0 - p);
  cfg.validate();
  return cfg;
}

std::vector<std::vector<double>> digress_transition(double alpha_bar,
                                                    std::span<const double> m) {
  if (alpha_bar < 0.0 || alpha_bar > 1.0)
    throw std::invalid_argument("digress_transition: alpha_bar outside [0,1]");
  check_probs(m, "digress_transition");
  const int a = static_cast<int>(m.size());
  std::vector<std::vector<double>> rows(a, std::vector<double>(a));
  for (int i = 0; i < a; ++i) {
    for (int j = 0; j < a; ++j) rows[i][j] = (1.0 - alpha_bar) * m[j];
    rows[i][i] += alpha_bar;
  }
  return rows;
}

double efficiency_ratio(std::span<const double> m) {
  check_probs(m, "efficiency_ratio");
  double s = 0.0;
  for (double p : m) s += p * (1.0 - p);
  if (!(s > 0.0))
    throw std::invalid_argument("efficiency_ratio: degenerate marginal");
  return 1.0 / s;
}

Graph compat_forward(const Graph& g0, int t, const DigressCompatConfig& compat,
                     const TransitionMatrices& q, RngStream& rng,
                     int* clamp_warnings) {
  compat.validate();
  g0.validate();
  q.validate();
  const ClassVocab& vocab = g0.vocab();
  if (static_cast<int>(q.qx.size()) != vocab.node_class_count ||
      static_cast<int>(q.qe.size()) != vocab.edge_class_count)
    throw std::invalid_argument("compat_forward: transition size mismatch");
  if (g0.size() != compat.schedule.n)
    throw std::invalid_argument("compat_forward: schedule n mismatch");
  if (!compat.selection_weights_node.empty() &&
      static_cast<int>(compat.selection_weights_node.size()) !=
          vocab.node_class_count)
    throw std::invalid_argument("compat_forward: node weight size mismatch");
  if (!compat.selection_weights_edge.empty() &&
      static_cast<int>(compat.selection_weights_edge.size()) !=
          vocab.edge_class_count)
    throw std::invalid_argument("compat_forward: edge weight size mismatch");

  int warn = 0;
  if (compat.neutral()) {
    if (clamp_warnings) *clamp_warnings = 0;
    return forward_noise(g0, t, compat.schedule, q, rng).graph;
  }

  const ScheduleParams synth =
      synthetic_schedule(compat.fixed_T, compat.schedule.r, compat.schedule.c);
  const double a = alpha_bar(t, synth);
  const int n = g0.size();

  // With weights present a slot changes independently at rate (1-abar)*w,
  // the per-slot chain of the emulated process; that keeps both the expected
  // change count and the class shares at their closed forms. Without weights
  // the scaled budget is drawn exactly, like the native forward.
  SelectionMask mask;
  if (compat.selection_weights_node.empty()) {
    int want = stochastic_round(compat.node_scale * (1.0 - a) * n, rng);
    if (want > n) {
      want = n;
      ++warn;
    }
    if (want > 0) mask.nodes = rng.sample_without_replacement(n, want);
  } else {
    bool clipped = false;
    for (int i = 0; i < n; ++i) {
      double p = (1.0 - a) * compat.selection_weights_node[g0.node_class(i)];
      if (p > 1.0) {
        p = 1.0;
        clipped = true;
      }
      if (rng.next_unit() < p) mask.nodes.push_back(i);
    }
    if (clipped) ++warn;
  }

  {
    std::vector<std::pair<int, int>> pool;
    if (compat.independent_edges) {
      for (int i = 0; i < n; ++i)
        for (int j = i + 1; j < n; ++j) pool.emplace_back(i, j);
    } else {
      pool = induced_pairs(mask.nodes);
    }
    if (compat.selection_weights_edge.empty()) {
      const double changed = static_cast<double>(mask.nodes.size());
      const double base_pairs = compat.independent_edges
                                    ? 0.5 * n * (n - 1)
                                    : 0.5 * changed * (changed - 1.0);
      int want = stochastic_round(
          compat.edge_scale_inv * (1.0 - a) * base_pairs * compat.schedule.r,
          rng);
      if (want > static_cast<int>(pool.size())) {
        want = static_cast<int>(pool.size());
        ++warn;
      }
      if (want > 0) {
        std::vector<int> picked = rng.sample_without_replacement(
            static_cast<int>(pool.size()), want);
        for (int idx : picked) mask.edges.push_back(pool[idx]);
      }
    } else {
      bool clipped = false;
      for (const auto& [i, j] : pool) {
        double p =
            (1.0 - a) * compat.selection_weights_edge[g0.edge_class(i, j)];
        if (p > 1.0) {
          p = 1.0;
          clipped = true;
        }
        if (rng.next_unit() < p) mask.edges.emplace_back(i, j);
      }
      if (clipped) ++warn;
    }
  }

  std::vector<double> node_draws(mask.nodes.size());
  for (auto& u : node_draws) u = rng.next_unit();
  std::vector<double> edge_draws(mask.edges.size());
  for (auto& u : edge_draws) u = rng.next_unit();

  Graph out = resample_selected(g0, mask, q, node_draws, edge_draws);
  if (clamp_warnings) *clamp_warnings = warn;
  return out;
}

HammingCurves hamming_curves(const Marginals& m, const ScheduleParams& params,
                             const DigressCompatConfig& compat, int trials,
                             RngStream& rng) {
  m.validate();
  params.validate();
  compat.validate();
  if (trials < 1) throw std::invalid_argument("hamming_curves: trials below 1");

  const TransitionMatrices q = build_transitions(m);
  const int n = params.n;
  const int t_dmol = params.T;
  const int t_dig = compat.fixed_T;

  auto iid_graph = [&](RngStream& r) {
    Graph g(n, ClassVocab{static_cast<int>(m.node.size()),
                          static_cast<int>(m.edge.size()), 0});
    for (int i = 0; i < n; ++i)
      g.set_node_class(i, r.sample_categorical(m.node));
    for (int i = 0; i < n; ++i)
      for (int j = i + 1; j < n; ++j)
        g.set_edge_class(i, j, r.sample_categorical(m.edge));
    return g;
  };

  std::vector<double> dmol_sums(static_cast<std::size_t>(trials) *
                                (t_dmol + 1));
  parallel_for(trials, [&](int trial) {
    RngStream srng = rng.derive("hamming-dmol", trial);
    Graph g0 = iid_graph(srng);
    for (int t = 0; t <= t_dmol; ++t) {
      Graph gt = forward_noise(g0, t, params, q, srng).graph;
      dmol_sums[static_cast<std::size_t>(trial) * (t_dmol + 1) + t] =
          hamming_nodes(g0, gt);
    }
  });

  const ScheduleParams synth = synthetic_schedule(t_dig, params.r, params.c);
  std::vector<std::vector<std::vector<double>>> rows_at(t_dig + 1);
  for (int t = 0; t <= t_dig; ++t)
    rows_at[t] = digress_transition(alpha_bar(t, synth), m.node);

  std::vector<double> dig_sums(static_cast<std::size_t>(trials) * (t_dig + 1));
  parallel_for(trials, [&](int trial) {
    RngStream srng = rng.derive("hamming-digress", trial);
    std::vector<int> x0(n);
    for (int i = 0; i < n; ++i) x0[i] = srng.sample_categorical(m.node);
    for (int t = 0; t <= t_dig; ++t) {
      int moved = 0;
      for (int i = 0; i < n; ++i) {
        int c = categorical_from_unit(rows_at[t][x0[i]], srng.next_unit());
        if (c != x0[i]) ++moved;
      }
      dig_sums[static_cast<std::size_t>(trial) * (t_dig + 1) + t] = moved;
    }
  });

  HammingCurves curves;
  curves.dmol.assign(t_dmol + 1, 0.0);
  curves.digress.assign(t_dig + 1, 0.0);
  for (int trial = 0; trial < trials; ++trial) {
    for (int t = 0; t <= t_dmol; ++t)
      curves.dmol[t] +=
          dmol_sums[static_cast<std::size_t>(trial) * (t_dmol + 1) + t];
    for (int t = 0; t <= t_dig; ++t)
      curves.digress[t] +=
          dig_sums[static_cast<std::size_t>(trial) * (t_dig + 1) + t];
  }
  for (auto& v : curves.dmol) v /= trials;
  for (auto& v : curves.digress) v /= trials;
  return curves;
}

double stationarity_check(const Marginals& m, int steps, int trials,
                          RngStream& rng) {
  m.validate();
  if (steps < 1 || trials < 1)
    throw std::invalid_argument("stationarity_check: steps and trials >= 1");

  const int a = static_cast<int>(m.node.size());
  const ScheduleParams synth = synthetic_schedule(steps, 0.2, 0.008);
  std::vector<std::vector<std::vector<double>>> step_rows(steps);
  for (int s = 1; s <= steps; ++s) {
    double prev = alpha(s - 1, synth);
    double cur = alpha(s, synth);
    double ratio = prev > 0.0 ? cur / prev : 0.0;
    step_rows[s - 1] = digress_transition(std::min(1.0, ratio), m.node);
  }

  std::vector<int> paths(static_cast<std::size_t>(trials) * (steps + 1));
  parallel_for(trials, [&](int trial) {
    RngStream srng = rng.derive("stationarity", trial);
    int x = srng.sample_categorical(m.node);
    paths[static_cast<std::size_t>(trial) * (steps + 1)] = x;
    for (int s = 1; s <= steps; ++s) {
      x = categorical_from_unit(step_rows[s - 1][x], srng.next_unit());
      paths[static_cast<std::size_t>(trial) * (steps + 1) + s] = x;
    }
  });

  double worst = 0.0;
  for (int s = 0; s <= steps; ++s) {
    std::vector<int> counts(a, 0);
    for (int trial = 0; trial < trials; ++trial)
      ++counts[paths[static_cast<std::size_t>(trial) * (steps + 1) + s]];
    for (int c = 0; c < a; ++c) {
      double dev =
          std::abs(static_cast<double>(counts[c]) / trials - m.node[c]);
      worst = std::max(worst, dev);
    }
  }
  return worst;
}

double edge_correction(int changed, int n) {
  if (n < 2) throw std::invalid_argument("edge_correction: n below 2");
  if (changed < 0 || changed > n)
    throw std::invalid_argument("edge_correction: changed outside [0,n]");
  if (changed < 2) return 0.0;  // avoids the -0.0 of 0 * (changed - 1)
  return (static_cast<double>(changed) * (changed - 1)) /
         (static_cast<double>(n) * (n - 1));
}

}  // namespace dmol
