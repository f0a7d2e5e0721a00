// SPDX-License-Identifier: Apache-2.0

#include "dmol/config.hpp"

#include <algorithm>
#include <cctype>
#include <fstream>
#include <set>
#include <sstream>

namespace dmol {

namespace {

std::string trim(const std::string& s) {
  std::size_t b = 0;
  std::size_t e = s.size();
  while (b < e && std::isspace(static_cast<unsigned char>(s[b]))) ++b;
  while (e > b && std::isspace(static_cast<unsigned char>(s[e - 1]))) --e;
  return s.substr(b, e - b);
}

std::string strip_comment(const std::string& line) {
  std::size_t cut = line.size();
  for (std::size_t i = 0; i < line.size(); ++i) {
    if (line[i] == '#' || line[i] == ';') {
      cut = i;
      break;
    }
  }
  return line.substr(0, cut);
}

[[noreturn]] void bad_value(const std::string& key, const std::string& value,
                            const char* want) {
  throw ConfigError("config: key '" + key + "' has value '" + value +
                    "', expected " + want);
}

}  // namespace

ConfigMap ConfigMap::parse(const std::string& text) {
  ConfigMap map;
  std::istringstream in(text);
  std::string line;
  std::string section;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    std::string body = trim(strip_comment(line));
    if (body.empty()) continue;
    if (body.front() == '[') {
      if (body.back() != ']' || body.size() < 3) {
        throw ConfigError("config: malformed section header at line " +
                          std::to_string(lineno));
      }
      section = trim(body.substr(1, body.size() - 2));
      if (section.empty()) {
        throw ConfigError("config: empty section name at line " +
                          std::to_string(lineno));
      }
      continue;
    }
    std::size_t eq = body.find('=');
    if (eq == std::string::npos) {
      throw ConfigError("config: expected key = value at line " +
                        std::to_string(lineno));
    }
    std::string key = trim(body.substr(0, eq));
    if (key.empty()) {
      throw ConfigError("config: empty key at line " + std::to_string(lineno));
    }
    if (section.empty()) {
      throw ConfigError("config: key '" + key +
                        "' appears before any [section] at line " +
                        std::to_string(lineno));
    }
    map.values_[section + "." + key] = trim(body.substr(eq + 1));
  }
  return map;
}

ConfigMap ConfigMap::load_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("config: cannot open '" + path + "'");
  std::ostringstream buf;
  buf << in.rdbuf();
  return parse(buf.str());
}

void ConfigMap::set(const std::string& dotted_key, const std::string& value) {
  if (dotted_key.find('.') == std::string::npos) {
    throw ConfigError("config: override key '" + dotted_key +
                      "' must be section.key");
  }
  values_[dotted_key] = value;
}

bool ConfigMap::has(const std::string& dotted_key) const {
  return values_.count(dotted_key) > 0;
}

std::string ConfigMap::get_string(const std::string& key,
                                  const std::string& fallback) const {
  auto it = values_.find(key);
  return it == values_.end() ? fallback : it->second;
}

int ConfigMap::get_int(const std::string& key, int fallback) const {
  auto it = values_.find(key);
  if (it == values_.end()) return fallback;
  try {
    std::size_t used = 0;
    int v = std::stoi(it->second, &used);
    if (used != it->second.size()) bad_value(key, it->second, "an integer");
    return v;
  } catch (const ConfigError&) {
    throw;
  } catch (const std::exception&) {
    bad_value(key, it->second, "an integer");
  }
}

std::uint64_t ConfigMap::get_u64(const std::string& key,
                                 std::uint64_t fallback) const {
  auto it = values_.find(key);
  if (it == values_.end()) return fallback;
  try {
    std::size_t used = 0;
    unsigned long long v = std::stoull(it->second, &used);
    if (used != it->second.size() || it->second.front() == '-') {
      bad_value(key, it->second, "an unsigned integer");
    }
    return v;
  } catch (const ConfigError&) {
    throw;
  } catch (const std::exception&) {
    bad_value(key, it->second, "an unsigned integer");
  }
}

double ConfigMap::get_double(const std::string& key, double fallback) const {
  auto it = values_.find(key);
  if (it == values_.end()) return fallback;
  try {
    std::size_t used = 0;
    double v = std::stod(it->second, &used);
    if (used != it->second.size()) bad_value(key, it->second, "a number");
    return v;
  } catch (const ConfigError&) {
    throw;
  } catch (const std::exception&) {
    bad_value(key, it->second, "a number");
  }
}

bool ConfigMap::get_bool(const std::string& key, bool fallback) const {
  auto it = values_.find(key);
  if (it == values_.end()) return fallback;
  std::string v = it->second;
  std::transform(v.begin(), v.end(), v.begin(),
                 [](unsigned char c) { return std::tolower(c); });
  if (v == "true" || v == "on" || v == "yes" || v == "1") return true;
  if (v == "false" || v == "off" || v == "no" || v == "0") return false;
  bad_value(key, it->second, "a boolean (true/false/on/off/yes/no/1/0)");
}

std::vector<std::string> ConfigMap::get_list(const std::string& key) const {
  auto it = values_.find(key);
  if (it == values_.end() || trim(it->second).empty()) return {};
  std::vector<std::string> out;
  std::string item;
  std::istringstream in(it->second);
  while (std::getline(in, item, ',')) out.push_back(trim(item));
  return out;
}

RunConfig RunConfig::from_map(const ConfigMap& map) {
  static const std::set<std::string> known = {
      "data.dataset",
      "vocab.symbols",
      "vocab.valences",
      "vocab.bond_orders",
      "schedule.k",
      "schedule.r",
      "schedule.c",
      "loss.lambda1",
      "loss.lambda2",
      "loss.lambda3",
      "loss.mse_reference",
      "loss.hard_count",
      "denoiser.layers",
      "denoiser.hidden",
      "denoiser.edge_hidden",
      "denoiser.n_max",
      "denoiser.steps",
      "denoiser.learning_rate",
      "denoiser.momentum",
      "denoiser.edge_scope",
      "denoiser.divergence_threshold",
      "denoiser.validation_size",
      "denoiser.validation_interval",
      "codec.enabled",
      "codec.k_rings",
      "sampling.num_samples",
      "sampling.batch",
      "sampling.seed",
      "analysis.trials",
      "analysis.steps",
      "analysis.n",
  };
  for (const auto& [key, value] : map.values()) {
    if (!known.count(key)) {
      throw ConfigError("config: unknown key '" + key + "'");
    }
  }

  RunConfig cfg;
  cfg.dataset = map.get_string("data.dataset", "");

  if (map.has("vocab.symbols") != map.has("vocab.valences")) {
    throw ConfigError(
        "config: vocab.symbols and vocab.valences must be given together");
  }
  if (map.has("vocab.symbols")) {
    cfg.atoms.symbols = map.get_list("vocab.symbols");
    cfg.atoms.max_valence.clear();
    for (const std::string& v : map.get_list("vocab.valences")) {
      try {
        cfg.atoms.max_valence.push_back(std::stoi(v));
      } catch (const std::exception&) {
        bad_value("vocab.valences", v, "an integer");
      }
    }
  }
  if (map.has("vocab.bond_orders")) {
    cfg.bonds.order.clear();
    for (const std::string& v : map.get_list("vocab.bond_orders")) {
      try {
        cfg.bonds.order.push_back(std::stoi(v));
      } catch (const std::exception&) {
        bad_value("vocab.bond_orders", v, "an integer");
      }
    }
  }

  cfg.schedule_k = map.get_int("schedule.k", cfg.schedule_k);
  cfg.schedule_r = map.get_double("schedule.r", cfg.schedule_r);
  cfg.schedule_c = map.get_double("schedule.c", cfg.schedule_c);

  cfg.loss_weights.lambda1 =
      map.get_double("loss.lambda1", cfg.loss_weights.lambda1);
  cfg.loss_weights.lambda2 =
      map.get_double("loss.lambda2", cfg.loss_weights.lambda2);
  cfg.loss_weights.lambda3 =
      map.get_double("loss.lambda3", cfg.loss_weights.lambda3);
  std::string ref = map.get_string("loss.mse_reference", "noisy");
  if (ref == "noisy") {
    cfg.train.mse_reference = MseReference::kNoisy;
  } else if (ref == "clean") {
    cfg.train.mse_reference = MseReference::kClean;
  } else {
    bad_value("loss.mse_reference", ref, "'noisy' or 'clean'");
  }
  cfg.train.hard_count = map.get_bool("loss.hard_count", cfg.train.hard_count);

  cfg.mpnn.layers = map.get_int("denoiser.layers", cfg.mpnn.layers);
  cfg.mpnn.hidden = map.get_int("denoiser.hidden", cfg.mpnn.hidden);
  cfg.mpnn.edge_hidden =
      map.get_int("denoiser.edge_hidden", cfg.mpnn.edge_hidden);
  cfg.mpnn.n_max = map.get_int("denoiser.n_max", 0);
  cfg.train.steps = map.get_int("denoiser.steps", cfg.train.steps);
  cfg.train.learning_rate =
      map.get_double("denoiser.learning_rate", cfg.train.learning_rate);
  cfg.train.momentum = map.get_double("denoiser.momentum", cfg.train.momentum);
  std::string scope = map.get_string("denoiser.edge_scope", "induced");
  if (scope == "induced") {
    cfg.train.edge_scope = EdgeScope::kInducedSubgraph;
  } else if (scope == "whole") {
    cfg.train.edge_scope = EdgeScope::kWholeGraph;
  } else {
    bad_value("denoiser.edge_scope", scope, "'induced' or 'whole'");
  }
  cfg.train.divergence_threshold = map.get_double(
      "denoiser.divergence_threshold", cfg.train.divergence_threshold);
  cfg.train.validation_size =
      map.get_int("denoiser.validation_size", cfg.train.validation_size);
  cfg.train.validation_interval = map.get_int("denoiser.validation_interval",
                                              cfg.train.validation_interval);

  cfg.codec_enabled = map.get_bool("codec.enabled", cfg.codec_enabled);
  cfg.codec_k_rings = map.get_int("codec.k_rings", cfg.codec_k_rings);

  cfg.num_samples = map.get_int("sampling.num_samples", cfg.num_samples);
  cfg.batch = map.get_int("sampling.batch", cfg.batch);
  cfg.seed = map.get_u64("sampling.seed", cfg.seed);

  cfg.analysis_trials = map.get_int("analysis.trials", cfg.analysis_trials);
  cfg.analysis_steps = map.get_int("analysis.steps", cfg.analysis_steps);
  cfg.analysis_n = map.get_int("analysis.n", cfg.analysis_n);

  cfg.validate();
  return cfg;
}

void RunConfig::validate() const {
  try {
    atoms.validate();
  } catch (const std::exception& e) {
    throw ConfigError(std::string("config: vocab.symbols/valences: ") +
                      e.what());
  }
  try {
    bonds.validate();
  } catch (const std::exception& e) {
    throw ConfigError(std::string("config: vocab.bond_orders: ") + e.what());
  }

  if (schedule_k < 1) {
    throw ConfigError(
        "config: schedule.k: ScheduleParams requires k >= 1");
  }
  if (!(schedule_r > 0.0 && schedule_r <= 1.0)) {
    throw ConfigError(
        "config: schedule.r: ScheduleParams requires r in (0, 1]");
  }
  if (!(schedule_c > 0.0)) {
    throw ConfigError("config: schedule.c: ScheduleParams requires c > 0");
  }

  try {
    loss_weights.validate();
  } catch (const std::exception& e) {
    throw ConfigError(std::string("config: loss.lambda*: ") + e.what());
  }

  if (mpnn.layers < 1) {
    throw ConfigError("config: denoiser.layers: MpnnDenoiser requires >= 1");
  }
  if (mpnn.hidden < 1 || mpnn.edge_hidden < 1) {
    throw ConfigError(
        "config: denoiser.hidden/edge_hidden: MpnnDenoiser requires >= 1");
  }
  if (mpnn.n_max < 0) {
    throw ConfigError(
        "config: denoiser.n_max: MpnnDenoiser requires >= 1 (0 = infer)");
  }
  if (train.steps < 0) {
    throw ConfigError("config: denoiser.steps: train requires >= 0");
  }
  if (train.learning_rate < 0.0) {
    throw ConfigError("config: denoiser.learning_rate: train requires >= 0");
  }
  if (train.momentum < 0.0 || train.momentum >= 1.0) {
    throw ConfigError(
        "config: denoiser.momentum: train requires a value in [0, 1)");
  }
  if (!(train.divergence_threshold > 0.0)) {
    throw ConfigError(
        "config: denoiser.divergence_threshold: train requires > 0");
  }
  if (train.validation_size < 0) {
    throw ConfigError("config: denoiser.validation_size: train requires >= 0");
  }
  if (train.validation_interval < 1) {
    throw ConfigError(
        "config: denoiser.validation_interval: train requires >= 1");
  }

  if (codec_k_rings < 0) {
    throw ConfigError("config: codec.k_rings: mine_rings requires k >= 0");
  }

  if (num_samples < 0) {
    throw ConfigError("config: sampling.num_samples: must be >= 0");
  }
  if (batch < 1) {
    throw ConfigError("config: sampling.batch: SampleConfig requires >= 1");
  }

  if (analysis_trials < 1) {
    throw ConfigError("config: analysis.trials: must be >= 1");
  }
  if (analysis_steps < 1) {
    throw ConfigError("config: analysis.steps: must be >= 1");
  }
  if (analysis_n < 2) {
    throw ConfigError("config: analysis.n: must be >= 2");
  }
}

}  // namespace dmol
