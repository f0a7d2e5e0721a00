// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstddef>
#include <map>
#include <string>
#include <vector>

#include "dmol/graph.hpp"

namespace dmol {

// Heavy-atom types with their maximum valences. Node class i is symbols[i].
struct AtomVocab {
  std::vector<std::string> symbols = {"C", "N", "O", "F"};
  std::vector<int> max_valence = {4, 3, 2, 1};

  void validate() const;
  int index_of(const std::string& symbol) const;  // -1 when unknown
  bool operator==(const AtomVocab&) const = default;
};

// Kekulized bond classes; entry c is the bond order of edge class c and the
// no-edge class has order zero.
struct BondVocab {
  std::vector<int> order = {0, 1, 2, 3};
  int no_edge_index = 0;

  void validate() const;
  int class_of_order(int bond_order) const;  // -1 when unsupported
  bool operator==(const BondVocab&) const = default;
};

ClassVocab chem_class_vocab(const AtomVocab& atoms, const BondVocab& bonds);

struct ParseError : std::runtime_error {
  ParseError(const std::string& message, std::size_t position);
  std::size_t position;  // 0-based offset into the input
};

// Supported subset: vocab atom symbols, branches (...), ring-closure digits
// 1-9, bond symbols - = #. No aromatic lowercase, charges, stereo, or
// bracket atoms. Hydrogens are implicit and never represented.
Graph parse_smiles(const std::string& s, const AtomVocab& atoms,
                   const BondVocab& bonds);

// Emits one component; parse_smiles(write_smiles(g)) is isomorphic to g.
std::string write_smiles(const Graph& g, const AtomVocab& atoms,
                         const BondVocab& bonds);

struct AtomDiagnostic {
  int bond_order_sum = 0;
  int max_valence = 0;
  bool ok = false;
};

struct ValidityReport {
  bool valid = false;          // under the configured connectivity switch
  bool valence_valid = false;  // n >= 1 and every atom within valence
  bool connected = false;
  std::vector<AtomDiagnostic> atoms;
};

ValidityReport check_validity(const Graph& g, const AtomVocab& atoms,
                              const BondVocab& bonds,
                              bool require_connected = true);

// Isomorphism-invariant digest: neighborhood-refinement coloring to a fixed
// point, then a canonical node order found by exhaustive tie-breaking. The
// digest is the full canonical encoding, so equal digests decode to the same
// graph up to relabeling.
std::string canonical_hash(const Graph& g);

struct LoadedDataset {
  std::vector<Graph> graphs;
  std::map<int, double> node_count_distribution;
  int skipped = 0;
  std::vector<std::string> line_errors;
};

// One molecule per line: SMILES or the JSON graph format. '#' lines and
// blank lines are ignored; unparseable lines are counted and reported.
LoadedDataset load_dataset(const std::string& path, const AtomVocab& atoms,
                           const BondVocab& bonds);

}  // namespace dmol
