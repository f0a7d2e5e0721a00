// SPDX-License-Identifier: Apache-2.0

#include "dmol/cli.hpp"

#include <algorithm>
#include <charconv>
#include <chrono>
#include <cmath>
#include <fstream>
#include <functional>
#include <json.hpp>
#include <limits>
#include <numeric>
#include <ostream>
#include <set>
#include <span>
#include <sstream>
#include <thread>
#include <utility>

#include "dmol/analysis.hpp"
#include "dmol/checkpoint.hpp"
#include "dmol/chem.hpp"
#include "dmol/metrics.hpp"
#include "dmol/parallel.hpp"
#include "dmol/rings.hpp"
#include "dmol/sampler.hpp"

namespace dmol {

namespace {

int run_guarded(std::ostream& err, const std::function<int()>& body) {
  try {
    return body();
  } catch (const ConfigError& e) {
    err << "error: " << e.what() << "\n";
    return kExitUsage;
  } catch (const DivergenceError& e) {
    err << "error: " << e.what() << "\n";
    return kExitDivergence;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << "\n";
    return kExitData;
  }
}

// Shortest round-trip formatting, so CSV numbers reload exactly.
std::string fmt_double(double v) {
  char buf[32];
  auto res = std::to_chars(buf, buf + sizeof(buf), v);
  return std::string(buf, res.ptr);
}

void write_file(const std::string& path, const std::string& content) {
  std::ofstream f(path);
  if (!f) {
    throw std::runtime_error("cannot open '" + path + "' for writing");
  }
  f << content;
  if (!f) throw std::runtime_error("write failed for '" + path + "'");
}

std::string require_out(const CliCommon& common, const char* cmd) {
  if (common.out.empty()) {
    throw ConfigError(std::string(cmd) + ": --out is required");
  }
  return common.out;
}

std::string hardware_label() {
  return std::to_string(worker_count()) + " workers / " +
         std::to_string(std::thread::hardware_concurrency()) + " hw threads";
}

double elapsed_ms(std::chrono::steady_clock::time_point t0) {
  return std::chrono::duration<double, std::milli>(
             std::chrono::steady_clock::now() - t0)
      .count();
}

std::vector<Graph> load_corpus(const RunConfig& cfg) {
  if (cfg.dataset.empty()) {
    throw ConfigError("config: data.dataset is required for this command");
  }
  LoadedDataset ds = load_dataset(cfg.dataset, cfg.atoms, cfg.bonds);
  if (ds.skipped > 0) {
    throw std::runtime_error("dataset '" + cfg.dataset + "': " +
                             std::to_string(ds.skipped) +
                             " unparseable lines (first: " +
                             ds.line_errors.front() + ")");
  }
  if (ds.graphs.empty()) {
    throw std::runtime_error("dataset '" + cfg.dataset +
                             "' contains no molecules");
  }
  return std::move(ds.graphs);
}

RingDictionary load_dict(const std::string& path) {
  std::ifstream in(path);
  if (!in) {
    throw std::runtime_error("cannot open ring dictionary '" + path + "'");
  }
  nlohmann::json j;
  try {
    in >> j;
  } catch (const std::exception& e) {
    throw std::runtime_error("ring dictionary '" + path +
                             "' is not valid JSON: " + e.what());
  }
  return RingDictionary::from_json(j);
}

// Corpus mapped into the operating space: compressed over the extended vocab
// when the codec is on, untouched otherwise.
struct Prepared {
  std::vector<Graph> operating;
  ClassVocab vocab;
  Marginals marginals;
  TransitionMatrices q;
  std::map<int, double> node_counts;
  std::optional<RingDictionary> rings;
  MpnnConfig mpnn;
};

Prepared prepare(const RunConfig& cfg, const std::vector<Graph>& corpus) {
  Prepared p;
  if (cfg.codec_enabled) {
    p.rings = mine_rings(corpus, cfg.codec_k_rings, cfg.atoms, cfg.bonds);
    p.operating.reserve(corpus.size());
    for (const Graph& g : corpus) {
      p.operating.push_back(compress(g, *p.rings).graph);
    }
    p.vocab = p.rings->extended_vocab();
  } else {
    p.operating = corpus;
    p.vocab = chem_class_vocab(cfg.atoms, cfg.bonds);
  }
  p.marginals = estimate_marginals(p.operating);
  p.q = build_transitions(p.marginals);
  p.node_counts = node_count_distribution(p.operating);
  p.mpnn = cfg.mpnn;
  if (p.mpnn.n_max == 0) {
    int widest = 1;
    for (const Graph& g : p.operating) widest = std::max(widest, g.size());
    p.mpnn.n_max = widest;
  }
  return p;
}

ScheduleParams schedule_template(const RunConfig& cfg) {
  ScheduleParams sp;
  sp.k = cfg.schedule_k;
  sp.r = cfg.schedule_r;
  sp.c = cfg.schedule_c;
  sp.n = 0;
  sp.T = 0;
  return sp;
}

struct TrainOutput {
  Checkpoint ckpt;
  TrainResult result;
};

// Shared by train and ablate so a single-combination ablation reproduces
// cmd_train bit for bit: substreams depend only on the resolved seed.
TrainOutput run_training(const RunConfig& cfg, const LossWeights& w,
                         const TrainConfig& tc,
                         const std::vector<Graph>& corpus) {
  Prepared p = prepare(cfg, corpus);
  RngStream root(cfg.seed);
  MpnnDenoiser d(p.vocab, p.mpnn, root.derive("cli-init"));
  RngStream trng = root.derive("cli-train");
  TrainResult res =
      train(d, p.operating, schedule_template(cfg), p.q, w, tc, trng);

  TrainOutput out;
  out.ckpt.atoms = cfg.atoms;
  out.ckpt.bonds = cfg.bonds;
  out.ckpt.schedule = schedule_template(cfg);
  out.ckpt.marginals = std::move(p.marginals);
  out.ckpt.transitions = std::move(p.q);
  out.ckpt.node_counts = std::move(p.node_counts);
  out.ckpt.mpnn = p.mpnn;
  out.ckpt.params = d.params();
  out.ckpt.rings = std::move(p.rings);
  out.result = std::move(res);
  return out;
}

struct SampleStats {
  int requested = 0;
  int emitted = 0;
  int decode_errors = 0;
  int ambiguity_warnings = 0;
  std::vector<std::pair<int, double>> batches;  // size, wall ms
};

// Generates in batches and maps everything back to the base chem vocab;
// decode failures are dropped and counted, never fatal.
std::vector<Graph> run_sampling(const Checkpoint& ck, int num_samples,
                                int batch, std::uint64_t seed,
                                SampleStats* stats) {
  if (num_samples < 0) {
    throw ConfigError("sample: sampling.num_samples must be >= 0");
  }
  ClassVocab vocab = ck.operating_vocab();
  MpnnDenoiser d(vocab, ck.mpnn, RngStream(0));
  if (d.params().size() != ck.params.size()) {
    throw std::runtime_error(
        "checkpoint: parameter count does not fit the declared architecture");
  }
  for (std::size_t i = 0; i < ck.params.size(); ++i) {
    const ParamMatrix& have = d.params()[i];
    const ParamMatrix& want = ck.params[i];
    if (have.name != want.name || have.rows != want.rows ||
        have.cols != want.cols) {
      throw std::runtime_error("checkpoint: parameter '" + want.name +
                               "' does not fit the declared architecture");
    }
  }
  d.params() = ck.params;

  SampleConfig scfg;
  scfg.vocab = vocab;
  scfg.node_count_distribution = ck.node_counts;
  scfg.schedule = ck.schedule;
  scfg.marginals = ck.marginals;
  scfg.seed = seed;

  RngStream srng = RngStream(seed).derive("cli-sample");
  std::vector<Graph> out;
  out.reserve(static_cast<std::size_t>(num_samples));
  int remaining = num_samples;
  std::uint64_t batch_index = 0;
  while (remaining > 0) {
    scfg.batch = std::min(batch, remaining);
    RngStream brng = srng.derive("batch", batch_index++);
    auto t0 = std::chrono::steady_clock::now();
    std::vector<Graph> got = sample(d, scfg, brng);
    if (stats) stats->batches.emplace_back(scfg.batch, elapsed_ms(t0));
    for (Graph& g : got) {
      if (ck.rings) {
        try {
          int warn = 0;
          Graph base = decompress(g, *ck.rings, &warn);
          if (stats) stats->ambiguity_warnings += warn;
          out.push_back(std::move(base));
        } catch (const DecodeError&) {
          if (stats) ++stats->decode_errors;
        }
      } else {
        out.push_back(std::move(g));
      }
    }
    remaining -= scfg.batch;
  }
  if (stats) {
    stats->requested = num_samples;
    stats->emitted = static_cast<int>(out.size());
  }
  return out;
}

// SMILES for connected molecules, one-line JSON for the rest; either form
// reloads through the dataset reader.
std::string emit_lines(std::span<const Graph> mols, const AtomVocab& atoms,
                       const BondVocab& bonds, int* smiles_count,
                       int* json_count) {
  std::ostringstream lines;
  for (const Graph& g : mols) {
    ValidityReport rep = check_validity(g, atoms, bonds, true);
    if (g.size() >= 1 && rep.connected) {
      lines << write_smiles(g, atoms, bonds) << "\n";
      if (smiles_count) ++*smiles_count;
    } else {
      lines << g.to_json().dump() << "\n";
      if (json_count) ++*json_count;
    }
  }
  return lines.str();
}

std::set<std::string> corpus_hashes(const std::vector<Graph>& corpus) {
  std::vector<std::string> hs(corpus.size());
  parallel_for(static_cast<int>(corpus.size()),
               [&](int i) { hs[i] = canonical_hash(corpus[i]); });
  return {hs.begin(), hs.end()};
}

nlohmann::json report_json(const MetricReport& rep) {
  return {{"total", rep.total},
          {"valid", rep.valid},
          {"distinct_valid", rep.distinct_valid},
          {"novel", rep.novel},
          {"validity", rep.validity},
          {"uniqueness", rep.uniqueness},
          {"novelty", rep.novelty},
          {"vu", rep.vu},
          {"vun", rep.vun},
          {"undefined", rep.undefined}};
}

// Draws forward corruptions at partially-noised steps and counts masks whose
// edges escape the induced subgraph. Impossible by construction for the
// induced scope; expected almost surely for the whole-graph scope.
struct LocalityProbe {
  int draws = 0;
  int violations = 0;
};

LocalityProbe locality_probe(const std::vector<Graph>& corpus,
                             const RunConfig& cfg, const TransitionMatrices& q,
                             EdgeScope scope, RngStream rng) {
  LocalityProbe probe;
  for (int rep = 0; rep < 40 && probe.draws < 200; ++rep) {
    for (const Graph& g : corpus) {
      if (g.size() < 4) continue;
      ScheduleParams sp = ScheduleParams::for_graph(
          g.size(), cfg.schedule_k, cfg.schedule_r, cfg.schedule_c);
      int chosen = -1;
      for (int t = 1; t <= sp.T; ++t) {
        StepBudget b = step_budget(t, sp);
        if (b.n_nodes >= 1 && b.n_nodes < g.size() && b.n_edges >= 1) {
          chosen = t;
        }
      }
      if (chosen < 0) continue;
      NoisedGraph ng = forward_noise(g, chosen, sp, q, rng, scope);
      ++probe.draws;
      if (!ng.mask.edges_within_nodes()) ++probe.violations;
    }
  }
  return probe;
}

}  // namespace

RunConfig resolve_config(const CliCommon& common) {
  ConfigMap map;
  if (!common.config_path.empty()) {
    map = ConfigMap::load_file(common.config_path);
  }
  for (const std::string& ov : common.overrides) {
    std::size_t eq = ov.find('=');
    if (eq == std::string::npos || eq == 0) {
      throw ConfigError("config: override '" + ov +
                        "' must be section.key=value");
    }
    map.set(ov.substr(0, eq), ov.substr(eq + 1));
  }
  if (common.seed) map.set("sampling.seed", std::to_string(*common.seed));
  return RunConfig::from_map(map);
}

int cmd_train(const CliCommon& common, bool dry_run, std::ostream& log,
              std::ostream& err) {
  return run_guarded(err, [&]() -> int {
    RunConfig cfg = resolve_config(common);
    std::vector<Graph> corpus = load_corpus(cfg);
    if (dry_run) {
      Prepared p = prepare(cfg, corpus);
      log << "config ok: " << corpus.size() << " molecules, vocab "
          << p.vocab.node_class_count << "+" << p.vocab.edge_class_count
          << " classes, n_max " << p.mpnn.n_max << ", " << cfg.train.steps
          << " steps planned; nothing written\n";
      return kExitOk;
    }
    std::string out_path = require_out(common, "train");
    auto t0 = std::chrono::steady_clock::now();
    TrainOutput to = run_training(cfg, cfg.loss_weights, cfg.train, corpus);
    double wall = elapsed_ms(t0);
    to.ckpt.save(out_path);

    std::ostringstream csv;
    csv << "step,loss\n";
    for (std::size_t i = 0; i < to.result.loss_trace.size(); ++i) {
      csv << i << "," << fmt_double(to.result.loss_trace[i]) << "\n";
    }
    write_file(out_path + ".loss.csv", csv.str());

    log << "trained " << to.result.loss_trace.size() << " steps on "
        << corpus.size() << " molecules in " << fmt_double(wall) << " ms ("
        << hardware_label() << ")\n";
    if (!to.result.loss_trace.empty()) {
      log << "final loss " << fmt_double(to.result.loss_trace.back()) << "\n";
    }
    if (!to.result.validation_trace.empty()) {
      log << "validation ce " << fmt_double(to.result.validation_trace.front())
          << " -> " << fmt_double(to.result.validation_trace.back()) << "\n";
    }
    log << "checkpoint: " << out_path << "\n";
    return kExitOk;
  });
}

int cmd_sample(const CliCommon& common, const std::string& checkpoint_path,
               std::ostream& log, std::ostream& err) {
  return run_guarded(err, [&]() -> int {
    RunConfig cfg = resolve_config(common);
    std::string out_path = require_out(common, "sample");
    Checkpoint ck = Checkpoint::load(checkpoint_path);

    SampleStats stats;
    std::vector<Graph> mols =
        run_sampling(ck, cfg.num_samples, cfg.batch, cfg.seed, &stats);

    int smiles_count = 0;
    int json_count = 0;
    write_file(out_path, emit_lines(mols, ck.atoms, ck.bonds, &smiles_count,
                                    &json_count));

    nlohmann::json batches = nlohmann::json::array();
    for (const auto& [size, ms] : stats.batches) {
      batches.push_back({{"size", size}, {"wall_ms", ms}});
    }
    nlohmann::json report = {{"requested", stats.requested},
                             {"emitted", stats.emitted},
                             {"smiles_lines", smiles_count},
                             {"json_lines", json_count},
                             {"decode_errors", stats.decode_errors},
                             {"ambiguity_warnings", stats.ambiguity_warnings},
                             {"batches", std::move(batches)},
                             {"hardware", hardware_label()}};
    write_file(out_path + ".report.json", report.dump(2) + "\n");

    log << "emitted " << stats.emitted << "/" << stats.requested << " ("
        << smiles_count << " SMILES, " << json_count << " JSON, "
        << stats.decode_errors << " decode errors) to " << out_path << "\n";
    return kExitOk;
  });
}

int cmd_evaluate(const CliCommon& common, const std::string& generated_path,
                 std::ostream& log, std::ostream& err) {
  return run_guarded(err, [&]() -> int {
    RunConfig cfg = resolve_config(common);
    if (generated_path.empty()) {
      throw ConfigError("evaluate: an input file is required");
    }
    LoadedDataset gen = load_dataset(generated_path, cfg.atoms, cfg.bonds);
    if (gen.graphs.empty()) {
      throw ConfigError("evaluate: no molecules in '" + generated_path + "'");
    }
    std::vector<Graph> corpus = load_corpus(cfg);
    MetricReport rep =
        evaluate(gen.graphs, corpus_hashes(corpus), cfg.atoms, cfg.bonds);

    nlohmann::json j = report_json(rep);
    j["unparsed_lines"] = gen.skipped;
    if (common.out.empty()) {
      log << j.dump(2) << "\n";
    } else {
      write_file(common.out, j.dump(2) + "\n");
      log << "validity " << fmt_double(rep.validity) << ", uniqueness "
          << fmt_double(rep.uniqueness) << ", novelty "
          << fmt_double(rep.novelty) << " -> " << common.out << "\n";
    }
    return kExitOk;
  });
}

int cmd_mine_rings(const CliCommon& common, std::ostream& log,
                   std::ostream& err) {
  return run_guarded(err, [&]() -> int {
    RunConfig cfg = resolve_config(common);
    std::vector<Graph> corpus = load_corpus(cfg);
    RingDictionary dict =
        mine_rings(corpus, cfg.codec_k_rings, cfg.atoms, cfg.bonds);
    std::string text = dict.to_json().dump(2) + "\n";
    if (common.out.empty()) {
      log << text;
    } else {
      write_file(common.out, text);
    }
    log << "mined " << dict.entries.size() << " ring classes (shortfall "
        << dict.shortfall << ") from " << corpus.size() << " molecules\n";
    return kExitOk;
  });
}

int cmd_compress(const CliCommon& common, const std::string& dict_path,
                 const std::string& input_path, std::ostream& log,
                 std::ostream& err) {
  return run_guarded(err, [&]() -> int {
    RingDictionary dict = load_dict(dict_path);
    LoadedDataset in = load_dataset(input_path, dict.atoms, dict.bonds);
    if (in.skipped > 0) {
      throw std::runtime_error("input '" + input_path + "': " +
                               std::to_string(in.skipped) +
                               " unparseable lines (first: " +
                               in.line_errors.front() + ")");
    }
    std::ostringstream lines;
    long long before = 0;
    long long after = 0;
    for (const Graph& g : in.graphs) {
      CompressedGraph cg = compress(g, dict);
      before += g.size();
      after += cg.graph.size();
      nlohmann::json sup = nlohmann::json::array();
      for (const SupernodeRecord& rec : cg.supernodes) {
        sup.push_back(nlohmann::json::array({rec.node, rec.entry}));
      }
      nlohmann::json j = {{"format", "dmol-compressed-v1"},
                          {"graph", cg.graph.to_json()},
                          {"supernodes", std::move(sup)}};
      lines << j.dump() << "\n";
    }
    if (common.out.empty()) {
      log << lines.str();
    } else {
      write_file(common.out, lines.str());
    }
    log << "compressed " << in.graphs.size() << " molecules: " << before
        << " -> " << after << " nodes\n";
    return kExitOk;
  });
}

int cmd_decompress(const CliCommon& common, const std::string& dict_path,
                   const std::string& input_path, std::ostream& log,
                   std::ostream& err) {
  return run_guarded(err, [&]() -> int {
    RingDictionary dict = load_dict(dict_path);
    std::ifstream in(input_path);
    if (!in) {
      throw std::runtime_error("cannot open input '" + input_path + "'");
    }
    std::vector<Graph> mols;
    int warnings = 0;
    std::string line;
    int lineno = 0;
    while (std::getline(in, line)) {
      ++lineno;
      std::string body = line;
      std::size_t first = body.find_first_not_of(" \t\r");
      if (first == std::string::npos || body[first] == '#') continue;
      nlohmann::json j;
      try {
        j = nlohmann::json::parse(body);
      } catch (const std::exception& e) {
        throw std::runtime_error("input '" + input_path + "' line " +
                                 std::to_string(lineno) +
                                 ": not valid JSON: " + e.what());
      }
      int warn = 0;
      if (j.contains("format") && j.at("format") == "dmol-compressed-v1") {
        CompressedGraph cg;
        cg.graph = Graph::from_json(j.at("graph"), dict.extended_vocab());
        for (const auto& rec : j.at("supernodes")) {
          if (rec.size() != 2) {
            throw std::runtime_error("input '" + input_path + "' line " +
                                     std::to_string(lineno) +
                                     ": supernode entry must be [node, entry]");
          }
          cg.supernodes.push_back(
              {rec.at(0).get<int>(), rec.at(1).get<int>()});
        }
        mols.push_back(decompress(cg, dict, &warn));
      } else {
        mols.push_back(decompress(Graph::from_json(j, dict.extended_vocab()),
                                  dict, &warn));
      }
      warnings += warn;
    }
    int smiles_count = 0;
    int json_count = 0;
    std::string text =
        emit_lines(mols, dict.atoms, dict.bonds, &smiles_count, &json_count);
    if (common.out.empty()) {
      log << text;
    } else {
      write_file(common.out, text);
    }
    log << "decompressed " << mols.size() << " molecules ("
        << warnings << " ambiguity warnings)\n";
    return kExitOk;
  });
}

int cmd_analyze(const CliCommon& common, const std::string& kind,
                std::ostream& log, std::ostream& err) {
  return run_guarded(err, [&]() -> int {
    RunConfig cfg = resolve_config(common);
    std::string out_path = require_out(common, "analyze");
    std::vector<Graph> corpus = load_corpus(cfg);
    Marginals m = estimate_marginals(corpus);
    RngStream arng = RngStream(cfg.seed).derive("cli-analyze");

    std::ostringstream csv;
    nlohmann::json summary;
    summary["kind"] = kind;

    if (kind == "efficiency") {
      double node_ratio = efficiency_ratio(m.node);
      double edge_ratio = efficiency_ratio(m.edge);
      csv << "target,ratio\n";
      csv << "nodes," << fmt_double(node_ratio) << "\n";
      csv << "edges," << fmt_double(edge_ratio) << "\n";
      summary["node_ratio"] = node_ratio;
      summary["edge_ratio"] = edge_ratio;
      summary["node_marginals"] = m.node;
      summary["edge_marginals"] = m.edge;
      log << "efficiency ratio: nodes " << fmt_double(node_ratio) << ", edges "
          << fmt_double(edge_ratio) << "\n";
    } else if (kind == "hamming") {
      ScheduleParams params = ScheduleParams::for_graph(
          cfg.analysis_n, cfg.schedule_k, cfg.schedule_r, cfg.schedule_c);
      DigressCompatConfig compat = DigressCompatConfig::digress_for(params, m);
      HammingCurves curves =
          hamming_curves(m, params, compat, cfg.analysis_trials, arng);
      csv << "t,dmol,digress\n";
      for (int t = 0; t <= params.T; ++t) {
        csv << t << "," << fmt_double(curves.dmol[t]) << ","
            << fmt_double(curves.digress[t]) << "\n";
      }
      summary["n"] = cfg.analysis_n;
      summary["T"] = params.T;
      summary["trials"] = cfg.analysis_trials;
      summary["dmol_final"] = curves.dmol.back();
      summary["digress_final"] = curves.digress.back();
      log << "hamming curves over T=" << params.T << ": dmol ends at "
          << fmt_double(curves.dmol.back()) << ", digress at "
          << fmt_double(curves.digress.back()) << "\n";
    } else if (kind == "stationarity") {
      double dev = stationarity_check(m, cfg.analysis_steps,
                                      cfg.analysis_trials, arng);
      csv << "steps,trials,max_deviation\n";
      csv << cfg.analysis_steps << "," << cfg.analysis_trials << ","
          << fmt_double(dev) << "\n";
      summary["steps"] = cfg.analysis_steps;
      summary["trials"] = cfg.analysis_trials;
      summary["max_deviation"] = dev;
      log << "stationarity max deviation " << fmt_double(dev) << " over "
          << cfg.analysis_steps << " steps\n";
    } else if (kind == "compat") {
      int n = cfg.analysis_n;
      ScheduleParams params = ScheduleParams::for_graph(
          n, cfg.schedule_k, cfg.schedule_r, cfg.schedule_c);
      DigressCompatConfig compat = DigressCompatConfig::digress_for(params, m);
      TransitionMatrices q = build_transitions(m);
      ScheduleParams synth =
          ScheduleParams::for_graph(compat.fixed_T, 1, cfg.schedule_r,
                                    cfg.schedule_c);
      ClassVocab vocab = chem_class_vocab(cfg.atoms, cfg.bonds);
      TerminalMarginals start{m.node, m.edge};
      double sum_px = 0.0;
      for (double p : m.node) sum_px += p * (1.0 - p);
      double sum_pe = 0.0;
      for (double p : m.edge) sum_pe += p * (1.0 - p);
      double all_pairs = 0.5 * n * (n - 1);

      int trials = cfg.analysis_trials;
      int stride = std::max(1, compat.fixed_T / 16);
      std::vector<int> grid;
      for (int t = 0; t <= compat.fixed_T; t += stride) grid.push_back(t);
      if (grid.back() != compat.fixed_T) grid.push_back(compat.fixed_T);

      csv << "t,alpha_bar,mc_nodes,expected_nodes,mc_edges,"
             "expected_edges_raw,expected_edges_corrected,ratio_raw,"
             "ratio_corrected,clamp_warnings\n";
      int total_clamps = 0;
      double worst_node_gap = 0.0;
      for (int t : grid) {
        double abar =
            std::min(1.0, alpha(t, synth) / alpha(0, synth));
        std::vector<double> nodes_changed(trials);
        std::vector<double> edges_changed(trials);
        std::vector<int> clamps(trials, 0);
        parallel_for(trials, [&](int trial) {
          RngStream trng = arng.derive(
              "compat", static_cast<std::uint64_t>(t) * trials + trial);
          Graph g0 = sample_terminal(n, vocab, start, trng);
          Graph gt = compat_forward(g0, t, compat, q, trng, &clamps[trial]);
          nodes_changed[trial] = hamming_nodes(g0, gt);
          edges_changed[trial] = hamming_edges(g0, gt);
        });
        double mc_nodes = 0.0;
        double mc_edges = 0.0;
        for (int trial = 0; trial < trials; ++trial) {
          mc_nodes += nodes_changed[trial];
          mc_edges += edges_changed[trial];
          total_clamps += clamps[trial];
        }
        mc_nodes /= trials;
        mc_edges /= trials;
        double expected_nodes = n * (1.0 - abar) * sum_px;
        double raw = all_pairs * (1.0 - abar) * sum_pe;
        double corrected =
            raw * edge_correction(
                      static_cast<int>(std::llround(expected_nodes)), n);
        double ratio_raw = raw > 0.0 ? mc_edges / raw : 0.0;
        double ratio_corrected =
            corrected > 0.0 ? mc_edges / corrected : 0.0;
        worst_node_gap =
            std::max(worst_node_gap, std::abs(mc_nodes - expected_nodes));
        csv << t << "," << fmt_double(abar) << "," << fmt_double(mc_nodes)
            << "," << fmt_double(expected_nodes) << "," << fmt_double(mc_edges)
            << "," << fmt_double(raw) << "," << fmt_double(corrected) << ","
            << fmt_double(ratio_raw) << "," << fmt_double(ratio_corrected)
            << "," << std::accumulate(clamps.begin(), clamps.end(), 0) << "\n";
      }
      summary["n"] = n;
      summary["trials"] = trials;
      summary["clamp_warnings"] = total_clamps;
      summary["worst_node_gap"] = worst_node_gap;
      log << "compat: worst node-count gap " << fmt_double(worst_node_gap)
          << " over " << grid.size() << " steps, " << total_clamps
          << " clamps\n";
    } else {
      throw ConfigError(
          "analyze: kind must be one of efficiency, hamming, stationarity, "
          "compat");
    }

    write_file(out_path, csv.str());
    write_file(out_path + ".json", summary.dump(2) + "\n");
    return kExitOk;
  });
}

int cmd_ablate(const CliCommon& common, std::ostream& log, std::ostream& err) {
  return run_guarded(err, [&]() -> int {
    RunConfig cfg = resolve_config(common);
    if (cfg.num_samples < 1) {
      throw ConfigError("ablate: sampling.num_samples must be >= 1");
    }
    std::vector<Graph> corpus = load_corpus(cfg);
    std::set<std::string> hashes = corpus_hashes(corpus);
    Marginals probe_m = estimate_marginals(corpus);
    TransitionMatrices probe_q = build_transitions(probe_m);

    struct Combo {
      bool mse;
      EdgeScope scope;
    };
    const Combo combos[] = {{true, EdgeScope::kInducedSubgraph},
                            {true, EdgeScope::kWholeGraph},
                            {false, EdgeScope::kInducedSubgraph},
                            {false, EdgeScope::kWholeGraph}};

    std::ostringstream csv;
    csv << "mse,edge_scope,validity,uniqueness,novelty,vu,vun,final_loss,"
           "locality_draws,locality_violations\n";
    std::uint64_t combo_index = 0;
    for (const Combo& combo : combos) {
      LossWeights w = cfg.loss_weights;
      if (!combo.mse) {
        w.lambda2 = 0.0;
        w.lambda3 = 0.0;
      }
      TrainConfig tc = cfg.train;
      tc.edge_scope = combo.scope;

      TrainOutput to = run_training(cfg, w, tc, corpus);
      std::vector<Graph> mols =
          run_sampling(to.ckpt, cfg.num_samples, cfg.batch, cfg.seed, nullptr);
      if (mols.empty()) {
        throw std::runtime_error("ablate: a combination emitted no molecules");
      }
      MetricReport rep = evaluate(mols, hashes, cfg.atoms, cfg.bonds);

      LocalityProbe probe = locality_probe(
          corpus, cfg, probe_q, combo.scope,
          RngStream(cfg.seed).derive("cli-ablate-probe", combo_index));
      if (combo.scope == EdgeScope::kInducedSubgraph &&
          probe.violations != 0) {
        throw std::runtime_error(
            "ablate: induced-subgraph scope selected an edge outside the "
            "node mask");
      }
      if (combo.scope == EdgeScope::kWholeGraph && probe.draws >= 20 &&
          probe.violations == 0) {
        throw std::runtime_error(
            "ablate: whole-graph scope never escaped the induced subgraph "
            "across the probe");
      }

      double final_loss = to.result.loss_trace.empty()
                              ? std::numeric_limits<double>::quiet_NaN()
                              : to.result.loss_trace.back();
      const char* scope_name =
          combo.scope == EdgeScope::kInducedSubgraph ? "induced" : "whole";
      csv << (combo.mse ? "on" : "off") << "," << scope_name << ","
          << fmt_double(rep.validity) << "," << fmt_double(rep.uniqueness)
          << "," << fmt_double(rep.novelty) << "," << fmt_double(rep.vu)
          << "," << fmt_double(rep.vun) << "," << fmt_double(final_loss)
          << "," << probe.draws << "," << probe.violations << "\n";
      log << "combo mse=" << (combo.mse ? "on" : "off") << " scope="
          << scope_name << ": validity " << fmt_double(rep.validity)
          << ", locality violations " << probe.violations << "/"
          << probe.draws << "\n";
      ++combo_index;
    }

    if (common.out.empty()) {
      log << csv.str();
    } else {
      write_file(common.out, csv.str());
    }
    return kExitOk;
  });
}

}  // namespace dmol
