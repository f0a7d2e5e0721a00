// SPDX-License-Identifier: Apache-2.0

#include "dmol/denoiser.hpp"

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <numeric>
#include <stdexcept>

namespace dmol {

namespace {

constexpr int kCondDims = 4;

int feature_width(const ClassVocab& vocab) {
  return (vocab.edge_class_count - 1) + 4;
}

ParamMatrix make_weight(std::string name, int rows, int cols, RngStream& rng) {
  ParamMatrix p;
  p.name = std::move(name);
  p.rows = rows;
  p.cols = cols;
  p.data.resize(static_cast<std::size_t>(rows) * cols);
  double scale = 1.0 / std::sqrt(static_cast<double>(rows));
  for (double& v : p.data) v = (rng.next_unit() * 2.0 - 1.0) * scale;
  return p;
}

ParamMatrix make_bias(std::string name, int cols) {
  ParamMatrix p;
  p.name = std::move(name);
  p.rows = 1;
  p.cols = cols;
  p.data.assign(cols, 0.0);
  return p;
}

Prediction materialize_prediction(const Tape& tape, int node_probs,
                                  int edge_probs,
                                  const std::vector<std::pair<int, int>>& pairs,
                                  int n, const ClassVocab& vocab) {
  Prediction p;
  p.n = n;
  p.node_class_count = vocab.node_class_count;
  p.edge_class_count = vocab.edge_class_count;
  p.node_probs.assign(tape.value(node_probs).begin(),
                      tape.value(node_probs).end());
  p.edge_probs.assign(
      static_cast<std::size_t>(n) * n * vocab.edge_class_count, 0.0);
  for (int i = 0; i < n; ++i) p.edge_prob(i, i, vocab.no_edge_index) = 1.0;
  std::span<const double> ev = tape.value(edge_probs);
  for (std::size_t q = 0; q < pairs.size(); ++q) {
    auto [i, j] = pairs[q];
    for (int c = 0; c < vocab.edge_class_count; ++c) {
      double v = ev[q * vocab.edge_class_count + c];
      p.edge_prob(i, j, c) = v;
      p.edge_prob(j, i, c) = v;
    }
  }
  return p;
}

}  // namespace

std::vector<std::array<int, 4>> cycle_participation(const Graph& g) {
  int n = g.size();
  int no_edge = g.vocab().no_edge_index;
  std::vector<std::vector<int>> adj(n);
  for (int i = 0; i < n; ++i) {
    for (int j = i + 1; j < n; ++j) {
      if (g.edge_class(i, j) != no_edge) {
        adj[i].push_back(j);
        adj[j].push_back(i);
      }
    }
  }
  std::vector<std::array<int, 4>> counts(n, {0, 0, 0, 0});
  std::vector<int> path;
  std::vector<char> on_path(n, 0);
  // Each simple cycle is enumerated once: anchored at its smallest vertex s
  // and deduplicated across the two traversal directions by requiring the
  // second vertex to be smaller than the closing vertex.
  auto dfs = [&](auto&& self, int v, int s) -> void {
    for (int w : adj[v]) {
      if (w == s) {
        if (path.size() >= 3 && path[1] < path.back()) {
          int slot = static_cast<int>(path.size()) - 3;
          for (int u : path) counts[u][slot] += 1;
        }
      } else if (w > s && !on_path[w] && path.size() < 6) {
        path.push_back(w);
        on_path[w] = 1;
        self(self, w, s);
        on_path[w] = 0;
        path.pop_back();
      }
    }
  };
  for (int s = 0; s < n; ++s) {
    path.assign(1, s);
    std::fill(on_path.begin(), on_path.end(), 0);
    on_path[s] = 1;
    dfs(dfs, s, s);
  }
  return counts;
}

Features featurize(const Graph& g, const StepBudget& budget,
                   const ScheduleParams& params, int n_max) {
  if (n_max < 1) throw std::invalid_argument("featurize: n_max must be >= 1");
  const ClassVocab& vocab = g.vocab();
  int width = feature_width(vocab);
  Features f;
  f.per_node_width = width;
  f.per_node.assign(static_cast<std::size_t>(g.size()) * width, 0.0);
  auto cycles = cycle_participation(g);
  for (int i = 0; i < g.size(); ++i) {
    double* row = f.per_node.data() + static_cast<std::size_t>(i) * width;
    int col = 0;
    for (int c = 0; c < vocab.edge_class_count; ++c) {
      if (c == vocab.no_edge_index) continue;
      int deg = 0;
      for (int j = 0; j < g.size(); ++j) {
        if (j != i && g.edge_class(i, j) == c) ++deg;
      }
      row[col++] = deg;
    }
    for (int slot = 0; slot < 4; ++slot) row[col++] = cycles[i][slot];
  }
  f.per_graph = {static_cast<double>(g.size()) / n_max,
                 static_cast<double>(budget.t) / params.T, budget.rx,
                 budget.re};
  return f;
}

DenoiserInput make_denoiser_input(const Graph& g, int t,
                                  const ScheduleParams& params, int n_max) {
  StepBudget budget = step_budget(t, params);
  DenoiserInput in{g, t, featurize(g, budget, params, n_max), budget.rx,
                   budget.re};
  return in;
}

OracleDenoiser::OracleDenoiser(Graph clean) : clean_(std::move(clean)) {
  clean_.validate();
}

int OracleDenoiser::feature_n_max() const {
  return clean_.size() > 0 ? clean_.size() : 1;
}

Prediction OracleDenoiser::predict(const DenoiserInput& in) const {
  if (in.graph.size() != clean_.size()) {
    throw std::invalid_argument("OracleDenoiser: size mismatch");
  }
  return Prediction::one_hot(clean_);
}

MpnnDenoiser::MpnnDenoiser(ClassVocab vocab, MpnnConfig cfg, RngStream init_rng)
    : vocab_(vocab), cfg_(cfg) {
  vocab_.validate();
  if (cfg_.layers < 1 || cfg_.hidden < 1 || cfg_.edge_hidden < 1 ||
      cfg_.n_max < 1) {
    throw std::invalid_argument("MpnnDenoiser: bad config");
  }
  int a = vocab_.node_class_count;
  int b = vocab_.edge_class_count;
  int fw = feature_width(vocab_);
  int dh = cfg_.hidden;
  int de = cfg_.edge_hidden;
  params_.push_back(
      make_weight("node_embed_w", a + fw + kCondDims, dh, init_rng));
  params_.push_back(make_bias("node_embed_b", dh));
  params_.push_back(make_weight("edge_embed_w", b + kCondDims, de, init_rng));
  params_.push_back(make_bias("edge_embed_b", de));
  for (int l = 0; l < cfg_.layers; ++l) {
    std::string sfx = "_" + std::to_string(l);
    params_.push_back(make_weight("edge_update_w" + sfx,
                                  de + 2 * dh + kCondDims, de, init_rng));
    params_.push_back(make_bias("edge_update_b" + sfx, de));
    params_.push_back(make_weight("message_w" + sfx, de + dh, dh, init_rng));
    params_.push_back(make_bias("message_b" + sfx, dh));
    params_.push_back(make_weight("node_update_w" + sfx, 2 * dh + kCondDims,
                                  dh, init_rng));
    params_.push_back(make_bias("node_update_b" + sfx, dh));
  }
  params_.push_back(make_weight("node_out_w", dh + kCondDims, a, init_rng));
  params_.push_back(make_bias("node_out_b", a));
  params_.push_back(
      make_weight("edge_out_w", de + dh + kCondDims, b, init_rng));
  params_.push_back(make_bias("edge_out_b", b));
}

int MpnnDenoiser::parameter_count() const {
  int total = 0;
  for (const ParamMatrix& p : params_) {
    total += static_cast<int>(p.data.size());
  }
  return total;
}

MpnnDenoiser::TapeForward MpnnDenoiser::build_forward(
    Tape& tape, const DenoiserInput& in) const {
  const Graph& g = in.graph;
  if (!(g.vocab() == vocab_)) {
    throw std::invalid_argument("MpnnDenoiser: vocab mismatch");
  }
  int n = g.size();
  int a = vocab_.node_class_count;
  int b = vocab_.edge_class_count;
  int fw = feature_width(vocab_);
  if (in.features.per_node_width != fw ||
      in.features.per_node.size() != static_cast<std::size_t>(n) * fw ||
      in.features.per_graph.size() != kCondDims) {
    throw std::invalid_argument("MpnnDenoiser: feature shape mismatch");
  }

  TapeForward out;
  out.leaf_ids.reserve(params_.size());
  for (const ParamMatrix& p : params_) {
    out.leaf_ids.push_back(tape.leaf(p.data, p.rows, p.cols));
  }
  auto leaf = [&](int idx) { return out.leaf_ids[idx]; };
  auto affine_tanh = [&](int x, int w_idx, int b_idx) {
    return tape.tanh_activation(
        tape.add_row_broadcast(tape.matmul(x, leaf(w_idx)), leaf(b_idx)));
  };

  for (int i = 0; i < n; ++i) {
    for (int j = i + 1; j < n; ++j) out.pairs.emplace_back(i, j);
  }
  int npairs = static_cast<int>(out.pairs.size());

  auto cond_rows = [&](int rows) {
    std::vector<double> data(static_cast<std::size_t>(rows) * kCondDims);
    for (int r = 0; r < rows; ++r) {
      std::copy(in.features.per_graph.begin(), in.features.per_graph.end(),
                data.begin() + static_cast<std::size_t>(r) * kCondDims);
    }
    return tape.constant(std::move(data), rows, kCondDims);
  };
  int cond_n = cond_rows(n);
  int cond_p = cond_rows(npairs);

  // Node input block: one-hot class | handcrafted features | conditioning.
  int x_width = a + fw + kCondDims;
  std::vector<double> x0(static_cast<std::size_t>(n) * x_width, 0.0);
  for (int i = 0; i < n; ++i) {
    double* row = x0.data() + static_cast<std::size_t>(i) * x_width;
    row[g.node_class(i)] = 1.0;
    std::copy(in.features.per_node.begin() + static_cast<std::size_t>(i) * fw,
              in.features.per_node.begin() +
                  static_cast<std::size_t>(i + 1) * fw,
              row + a);
    std::copy(in.features.per_graph.begin(), in.features.per_graph.end(),
              row + a + fw);
  }
  int h = affine_tanh(tape.constant(std::move(x0), n, x_width), 0, 1);

  int e_width = b + kCondDims;
  std::vector<double> e0(static_cast<std::size_t>(npairs) * e_width, 0.0);
  for (int q = 0; q < npairs; ++q) {
    double* row = e0.data() + static_cast<std::size_t>(q) * e_width;
    row[g.edge_class(out.pairs[q].first, out.pairs[q].second)] = 1.0;
    std::copy(in.features.per_graph.begin(), in.features.per_graph.end(),
              row + b);
  }
  int e = affine_tanh(tape.constant(std::move(e0), npairs, e_width), 2, 3);

  std::vector<int> firsts(npairs), seconds(npairs);
  for (int q = 0; q < npairs; ++q) {
    firsts[q] = out.pairs[q].first;
    seconds[q] = out.pairs[q].second;
  }
  // Directed message bookkeeping: pair q sends to both endpoints, reading the
  // opposite endpoint's state.
  std::vector<int> msg_dest(2 * npairs), msg_nbr(2 * npairs),
      e_twice(2 * npairs);
  for (int q = 0; q < npairs; ++q) {
    msg_dest[q] = firsts[q];
    msg_nbr[q] = seconds[q];
    msg_dest[npairs + q] = seconds[q];
    msg_nbr[npairs + q] = firsts[q];
    e_twice[q] = q;
    e_twice[npairs + q] = q;
  }

  for (int l = 0; l < cfg_.layers; ++l) {
    int base = 4 + 6 * l;
    int hi = tape.gather_rows(h, firsts);
    int hj = tape.gather_rows(h, seconds);
    // Orientation-symmetric pair summaries keep edge states well defined on
    // unordered pairs.
    int hsum = tape.add(hi, hj);
    int hprod = tape.mul(hi, hj);
    std::vector<int> eparts = {e, hsum, hprod, cond_p};
    e = affine_tanh(tape.concat_cols(eparts), base + 0, base + 1);

    int e2 = tape.gather_rows(e, e_twice);
    int hnbr = tape.gather_rows(h, msg_nbr);
    std::vector<int> mparts = {e2, hnbr};
    int msg = affine_tanh(tape.concat_cols(mparts), base + 2, base + 3);
    int agg = tape.scatter_add_rows(msg, msg_dest, n);
    std::vector<int> hparts = {h, agg, cond_n};
    h = affine_tanh(tape.concat_cols(hparts), base + 4, base + 5);
  }

  int tail = 4 + 6 * cfg_.layers;
  std::vector<int> nout_parts = {h, cond_n};
  out.node_logits = tape.add_row_broadcast(
      tape.matmul(tape.concat_cols(nout_parts), leaf(tail + 0)),
      leaf(tail + 1));
  int hi = tape.gather_rows(h, firsts);
  int hj = tape.gather_rows(h, seconds);
  int hsum = tape.add(hi, hj);
  std::vector<int> eout_parts = {e, hsum, cond_p};
  out.edge_logits = tape.add_row_broadcast(
      tape.matmul(tape.concat_cols(eout_parts), leaf(tail + 2)),
      leaf(tail + 3));
  return out;
}

Prediction MpnnDenoiser::predict(const DenoiserInput& in) const {
  Tape tape;
  TapeForward fwd = build_forward(tape, in);
  int node_probs = tape.softmax_rows(fwd.node_logits);
  int edge_probs = tape.softmax_rows(fwd.edge_logits);
  return materialize_prediction(tape, node_probs, edge_probs, fwd.pairs,
                                in.graph.size(), vocab_);
}

TapeLossResult training_loss(const MpnnDenoiser& d, const Graph& clean,
                             const Graph& noisy, const StepBudget& budget,
                             const ScheduleParams& params,
                             const LossWeights& w, bool hard_count,
                             MseReference ref,
                             std::vector<std::vector<double>>* grads_out) {
  if (clean.size() != noisy.size() || !(clean.vocab() == noisy.vocab())) {
    throw std::invalid_argument("training_loss: graph mismatch");
  }
  w.validate();
  DenoiserInput in =
      make_denoiser_input(noisy, budget.t, params, d.config().n_max);
  Tape tape;
  MpnnDenoiser::TapeForward fwd = d.build_forward(tape, in);
  int n = noisy.size();
  int npairs = static_cast<int>(fwd.pairs.size());

  std::vector<int> node_targets(n);
  for (int i = 0; i < n; ++i) node_targets[i] = clean.node_class(i);
  std::vector<int> edge_targets(npairs);
  for (int q = 0; q < npairs; ++q) {
    edge_targets[q] = clean.edge_class(fwd.pairs[q].first, fwd.pairs[q].second);
  }
  int objective = tape.add(
      tape.ce_from_logits(fwd.node_logits, node_targets),
      tape.scale(tape.ce_from_logits(fwd.edge_logits, edge_targets),
                 2.0 * w.lambda1));

  int node_probs = tape.softmax_rows(fwd.node_logits);
  int edge_probs = tape.softmax_rows(fwd.edge_logits);

  const Graph& reference = ref == MseReference::kNoisy ? noisy : clean;
  if (!hard_count) {
    std::vector<int> rnode(n), redge(npairs);
    for (int i = 0; i < n; ++i) rnode[i] = reference.node_class(i);
    for (int q = 0; q < npairs; ++q) {
      redge[q] =
          reference.edge_class(fwd.pairs[q].first, fwd.pairs[q].second);
    }
    // Soft changed-slot counts: rows minus the mass on the reference class.
    int diff_n = tape.add(
        tape.constant({static_cast<double>(n) - budget.n_nodes}, 1, 1),
        tape.scale(tape.pick_sum(node_probs, rnode), -1.0));
    int diff_e = tape.add(
        tape.constant({static_cast<double>(npairs) - budget.n_edges}, 1, 1),
        tape.scale(tape.pick_sum(edge_probs, redge), -1.0));
    objective = tape.add(
        objective, tape.add(tape.scale(tape.mul(diff_n, diff_n), w.lambda2),
                            tape.scale(tape.mul(diff_e, diff_e), w.lambda3)));
  }

  TapeLossResult out;
  out.objective = tape.scalar(objective);
  out.prediction = materialize_prediction(tape, node_probs, edge_probs,
                                          fwd.pairs, n, clean.vocab());
  out.reported = cross_entropy_loss(out.prediction, clean, w) +
                 count_penalty_loss(out.prediction, reference, budget, w);
  if (grads_out) {
    tape.backward(objective);
    grads_out->resize(fwd.leaf_ids.size());
    for (std::size_t k = 0; k < fwd.leaf_ids.size(); ++k) {
      std::span<const double> grad = tape.grad(fwd.leaf_ids[k]);
      (*grads_out)[k].assign(grad.begin(), grad.end());
    }
  }
  return out;
}

TrainResult train(MpnnDenoiser& d, std::span<const Graph> dataset,
                  const ScheduleParams& sched, const TransitionMatrices& q,
                  const LossWeights& w, const TrainConfig& cfg,
                  RngStream& rng) {
  if (dataset.empty()) throw std::invalid_argument("train: empty dataset");
  if (cfg.steps < 0 || cfg.learning_rate < 0.0 || cfg.momentum < 0.0 ||
      cfg.momentum >= 1.0 || cfg.validation_interval < 1) {
    throw std::invalid_argument("train: bad optimizer settings");
  }
  w.validate();
  q.validate();

  std::vector<std::vector<double>> velocity(d.params().size());
  for (std::size_t k = 0; k < velocity.size(); ++k) {
    velocity[k].assign(d.params()[k].data.size(), 0.0);
  }

  struct ValItem {
    Graph clean;
    Graph noisy;
    int t;
    ScheduleParams sp;
  };
  std::vector<ValItem> val;
  RngStream vrng = rng.derive("validation");
  for (int v = 0; v < cfg.validation_size; ++v) {
    const Graph& g0 =
        dataset[vrng.next_below(static_cast<std::uint64_t>(dataset.size()))];
    ScheduleParams sp =
        ScheduleParams::for_graph(g0.size(), sched.k, sched.r, sched.c);
    int t = 1 + static_cast<int>(vrng.next_below(sp.T));
    NoisedGraph ng = forward_noise(g0, t, sp, q, vrng, cfg.edge_scope);
    val.push_back({g0, std::move(ng.graph), t, sp});
  }
  auto validation_ce = [&]() {
    if (val.empty()) return 0.0;
    double total = 0.0;
    for (const ValItem& item : val) {
      DenoiserInput in =
          make_denoiser_input(item.noisy, item.t, item.sp, d.config().n_max);
      total += cross_entropy_loss(d.predict(in), item.clean, w);
    }
    return total / static_cast<double>(val.size());
  };

  TrainResult result;
  result.validation_trace.push_back(validation_ce());

  for (int step = 0; step < cfg.steps; ++step) {
    RngStream srng = rng.derive("train-step", static_cast<std::uint64_t>(step));
    const Graph& g0 =
        dataset[srng.next_below(static_cast<std::uint64_t>(dataset.size()))];
    ScheduleParams sp =
        ScheduleParams::for_graph(g0.size(), sched.k, sched.r, sched.c);
    int t = 1 + static_cast<int>(srng.next_below(sp.T));
    NoisedGraph ng = forward_noise(g0, t, sp, q, srng, cfg.edge_scope);
    StepBudget budget = step_budget(t, sp);

    std::vector<std::vector<double>> grads;
    TapeLossResult tl =
        training_loss(d, g0, ng.graph, budget, sp, w, cfg.hard_count,
                      cfg.mse_reference, &grads);
    if (!std::isfinite(tl.objective) || !std::isfinite(tl.reported) ||
        tl.objective > cfg.divergence_threshold ||
        tl.reported > cfg.divergence_threshold) {
      throw DivergenceError("train: loss diverged at step " +
                            std::to_string(step) + " (objective " +
                            std::to_string(tl.objective) + ")");
    }
    for (std::size_t k = 0; k < grads.size(); ++k) {
      std::vector<double>& p = d.params()[k].data;
      for (std::size_t idx = 0; idx < p.size(); ++idx) {
        velocity[k][idx] = cfg.momentum * velocity[k][idx] -
                           cfg.learning_rate * grads[k][idx];
        p[idx] += velocity[k][idx];
      }
    }
    result.loss_trace.push_back(tl.reported);
    if ((step + 1) % cfg.validation_interval == 0 || step + 1 == cfg.steps) {
      result.validation_trace.push_back(validation_ce());
    }
  }
  return result;
}

}  // namespace dmol
