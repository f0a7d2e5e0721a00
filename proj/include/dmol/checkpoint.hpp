// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <json.hpp>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "dmol/chem.hpp"
#include "dmol/denoiser.hpp"
#include "dmol/noise.hpp"
#include "dmol/rings.hpp"
#include "dmol/schedule.hpp"

namespace dmol {

// Single-file snapshot of a trained run: the denoiser weights plus
// everything generation needs. Serialized as one JSON document (schema
// "dmol-ckpt-v1"); doubles use shortest round-trip formatting, so
// load(save(x)) reproduces x bit for bit.
struct Checkpoint {
  AtomVocab atoms;
  BondVocab bonds;
  // Only (k, r, c) matter here; n and T are derived per sample.
  ScheduleParams schedule;
  // Over the operating vocab: the ring-extended one when rings is set.
  Marginals marginals;
  TransitionMatrices transitions;
  std::map<int, double> node_counts;
  MpnnConfig mpnn;
  std::vector<ParamMatrix> params;
  std::optional<RingDictionary> rings;

  ClassVocab operating_vocab() const;
  void validate() const;
  bool operator==(const Checkpoint&) const = default;

  nlohmann::json to_json() const;
  static Checkpoint from_json(const nlohmann::json& j);
  void save(const std::string& path) const;
  static Checkpoint load(const std::string& path);
};

}  // namespace dmol
