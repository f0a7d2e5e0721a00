// SPDX-License-Identifier: Apache-2.0

#include "dmol/checkpoint.hpp"

#include <cmath>
#include <fstream>
#include <set>
#include <stdexcept>

namespace dmol {

ClassVocab Checkpoint::operating_vocab() const {
  return rings ? rings->extended_vocab() : chem_class_vocab(atoms, bonds);
}

void Checkpoint::validate() const {
  atoms.validate();
  bonds.validate();
  if (schedule.k < 1) {
    throw std::invalid_argument("Checkpoint: schedule k must be >= 1");
  }
  if (!(schedule.r > 0.0 && schedule.r <= 1.0)) {
    throw std::invalid_argument("Checkpoint: schedule r must be in (0, 1]");
  }
  if (!(schedule.c > 0.0)) {
    throw std::invalid_argument("Checkpoint: schedule c must be > 0");
  }
  marginals.validate();
  transitions.validate();
  ClassVocab vocab = operating_vocab();
  if (marginals.node.size() != static_cast<std::size_t>(vocab.node_class_count) ||
      marginals.edge.size() != static_cast<std::size_t>(vocab.edge_class_count)) {
    throw std::invalid_argument(
        "Checkpoint: marginals do not match the operating vocab");
  }
  if (transitions.qx.size() != marginals.node.size() ||
      transitions.qe.size() != marginals.edge.size()) {
    throw std::invalid_argument(
        "Checkpoint: transitions do not match the marginals");
  }
  if (node_counts.empty()) {
    throw std::invalid_argument("Checkpoint: empty node-count distribution");
  }
  double sum = 0.0;
  for (const auto& [n, p] : node_counts) {
    if (n < 1) throw std::invalid_argument("Checkpoint: node count must be >= 1");
    if (p < 0.0) throw std::invalid_argument("Checkpoint: negative probability");
    sum += p;
  }
  if (std::abs(sum - 1.0) > 1e-9) {
    throw std::invalid_argument(
        "Checkpoint: node-count distribution must sum to 1");
  }
  if (mpnn.layers < 1 || mpnn.hidden < 1 || mpnn.edge_hidden < 1 ||
      mpnn.n_max < 1) {
    throw std::invalid_argument("Checkpoint: bad denoiser dimensions");
  }
  if (params.empty()) {
    throw std::invalid_argument("Checkpoint: no parameter matrices");
  }
  std::set<std::string> names;
  for (const ParamMatrix& pm : params) {
    if (pm.name.empty() || !names.insert(pm.name).second) {
      throw std::invalid_argument("Checkpoint: parameter names must be unique");
    }
    if (pm.rows < 1 || pm.cols < 1 ||
        pm.data.size() != static_cast<std::size_t>(pm.rows) * pm.cols) {
      throw std::invalid_argument("Checkpoint: parameter shape mismatch");
    }
  }
  if (rings) {
    rings->validate();
    if (!(rings->atoms == atoms) || !(rings->bonds == bonds)) {
      throw std::invalid_argument(
          "Checkpoint: ring dictionary vocab differs from the chem vocab");
    }
  }
}

nlohmann::json Checkpoint::to_json() const {
  validate();
  nlohmann::json j;
  j["format"] = "dmol-ckpt-v1";
  j["atoms"] = {{"symbols", atoms.symbols},
                {"max_valence", atoms.max_valence}};
  j["bonds"] = {{"order", bonds.order},
                {"no_edge_index", bonds.no_edge_index}};
  j["schedule"] = {{"k", schedule.k}, {"r", schedule.r}, {"c", schedule.c}};
  j["marginals"] = {{"node", marginals.node}, {"edge", marginals.edge}};
  j["transitions"] = {{"qx", transitions.qx}, {"qe", transitions.qe}};
  nlohmann::json counts = nlohmann::json::array();
  for (const auto& [n, p] : node_counts) {
    counts.push_back(nlohmann::json::array({n, p}));
  }
  j["node_counts"] = std::move(counts);
  j["mpnn"] = {{"layers", mpnn.layers},
               {"hidden", mpnn.hidden},
               {"edge_hidden", mpnn.edge_hidden},
               {"n_max", mpnn.n_max}};
  nlohmann::json ps = nlohmann::json::array();
  for (const ParamMatrix& pm : params) {
    ps.push_back({{"name", pm.name},
                  {"rows", pm.rows},
                  {"cols", pm.cols},
                  {"data", pm.data}});
  }
  j["params"] = std::move(ps);
  j["rings"] = rings ? rings->to_json() : nlohmann::json(nullptr);
  return j;
}

Checkpoint Checkpoint::from_json(const nlohmann::json& j) {
  if (!j.contains("format") || j.at("format") != "dmol-ckpt-v1") {
    throw std::invalid_argument(
        "Checkpoint::from_json: not a dmol-ckpt-v1 object");
  }
  Checkpoint c;
  c.atoms.symbols =
      j.at("atoms").at("symbols").get<std::vector<std::string>>();
  c.atoms.max_valence =
      j.at("atoms").at("max_valence").get<std::vector<int>>();
  c.bonds.order = j.at("bonds").at("order").get<std::vector<int>>();
  c.bonds.no_edge_index = j.at("bonds").at("no_edge_index").get<int>();
  c.schedule.k = j.at("schedule").at("k").get<int>();
  c.schedule.r = j.at("schedule").at("r").get<double>();
  c.schedule.c = j.at("schedule").at("c").get<double>();
  c.schedule.n = 0;
  c.schedule.T = 0;
  c.marginals.node =
      j.at("marginals").at("node").get<std::vector<double>>();
  c.marginals.edge =
      j.at("marginals").at("edge").get<std::vector<double>>();
  c.transitions.qx =
      j.at("transitions").at("qx").get<std::vector<std::vector<double>>>();
  c.transitions.qe =
      j.at("transitions").at("qe").get<std::vector<std::vector<double>>>();
  for (const auto& entry : j.at("node_counts")) {
    if (entry.size() != 2) {
      throw std::invalid_argument(
          "Checkpoint::from_json: node_counts entry must be [n, p]");
    }
    c.node_counts[entry.at(0).get<int>()] = entry.at(1).get<double>();
  }
  c.mpnn.layers = j.at("mpnn").at("layers").get<int>();
  c.mpnn.hidden = j.at("mpnn").at("hidden").get<int>();
  c.mpnn.edge_hidden = j.at("mpnn").at("edge_hidden").get<int>();
  c.mpnn.n_max = j.at("mpnn").at("n_max").get<int>();
  for (const auto& entry : j.at("params")) {
    ParamMatrix pm;
    pm.name = entry.at("name").get<std::string>();
    pm.rows = entry.at("rows").get<int>();
    pm.cols = entry.at("cols").get<int>();
    pm.data = entry.at("data").get<std::vector<double>>();
    c.params.push_back(std::move(pm));
  }
  if (!j.at("rings").is_null()) {
    c.rings = RingDictionary::from_json(j.at("rings"));
  }
  c.validate();
  return c;
}

void Checkpoint::save(const std::string& path) const {
  std::ofstream out(path);
  if (!out) {
    throw std::runtime_error("Checkpoint::save: cannot open '" + path + "'");
  }
  out << to_json().dump(2) << "\n";
  if (!out) {
    throw std::runtime_error("Checkpoint::save: write failed for '" + path +
                             "'");
  }
}

Checkpoint Checkpoint::load(const std::string& path) {
  std::ifstream in(path);
  if (!in) {
    throw std::runtime_error("Checkpoint::load: cannot open '" + path + "'");
  }
  nlohmann::json j;
  try {
    in >> j;
  } catch (const std::exception& e) {
    throw std::runtime_error("Checkpoint::load: '" + path +
                             "' is not valid JSON: " + e.what());
  }
  return from_json(j);
}

}  // namespace dmol
