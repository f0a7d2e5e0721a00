// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstdint>
#include <map>
#include <stdexcept>
#include <string>
#include <vector>

#include "dmol/chem.hpp"
#include "dmol/denoiser.hpp"
#include "dmol/loss.hpp"

namespace dmol {

struct ConfigError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// Flat view of a sectioned key = value file. Keys are addressed as
// "section.key"; '#' and ';' open comments; later assignments to the same
// key win. set() is the flag-override hook and always wins over the file.
class ConfigMap {
 public:
  static ConfigMap parse(const std::string& text);
  static ConfigMap load_file(const std::string& path);

  void set(const std::string& dotted_key, const std::string& value);
  bool has(const std::string& dotted_key) const;

  std::string get_string(const std::string& key,
                         const std::string& fallback) const;
  int get_int(const std::string& key, int fallback) const;
  std::uint64_t get_u64(const std::string& key, std::uint64_t fallback) const;
  double get_double(const std::string& key, double fallback) const;
  bool get_bool(const std::string& key, bool fallback) const;
  // Comma-separated list; empty value = empty list.
  std::vector<std::string> get_list(const std::string& key) const;

  const std::map<std::string, std::string>& values() const { return values_; }

 private:
  std::map<std::string, std::string> values_;
};

// One experiment's worth of settings. from_map rejects unknown keys, and
// validate() re-checks every numeric range, naming the library precondition
// that owns it, so a bad file fails before any work starts.
struct RunConfig {
  std::string dataset;

  AtomVocab atoms;
  BondVocab bonds;

  int schedule_k = 2;
  double schedule_r = 0.2;
  double schedule_c = 0.008;

  LossWeights loss_weights;
  TrainConfig train;  // carries hard_count, mse_reference, edge_scope
  MpnnConfig mpnn;    // n_max 0 = infer from the dataset at train time

  bool codec_enabled = false;
  int codec_k_rings = 3;

  int num_samples = 128;
  int batch = 32;
  std::uint64_t seed = 0;

  int analysis_trials = 4000;
  int analysis_steps = 20;
  int analysis_n = 8;

  static RunConfig from_map(const ConfigMap& map);
  void validate() const;
};

}  // namespace dmol
