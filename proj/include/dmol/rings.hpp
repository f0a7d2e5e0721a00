// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include <json.hpp>

#include "dmol/chem.hpp"
#include "dmol/graph.hpp"

namespace dmol {

// Identity of a ring: atom classes around the cycle and the bond classes
// between consecutive atoms (bond_sequence[i] joins atom i and i+1 mod size).
// The stored form is minimal over all rotations and both orientations.
struct RingSignature {
  int size = 0;
  std::vector<int> atom_sequence;
  std::vector<int> bond_sequence;

  static RingSignature canonical(std::vector<int> atom_seq,
                                 std::vector<int> bond_seq);
  void validate() const;
  auto operator<=>(const RingSignature&) const = default;

  nlohmann::json to_json() const;
  static RingSignature from_json(const nlohmann::json& j);
};

// All-carbon, and every ring atom keeps at most one spare valence after its
// two ring bonds, so externals can only ever be single bonds.
bool ring_eligible(const RingSignature& sig, const AtomVocab& atoms,
                   const BondVocab& bonds);

// Mined ring classes. Entry e compresses to node class a + e on top of the
// base chem vocab with a node classes.
struct RingDictionary {
  AtomVocab atoms;
  BondVocab bonds;
  std::vector<RingSignature> entries;
  int shortfall = 0;  // how many short of the requested K the corpus came up

  ClassVocab base_vocab() const;
  ClassVocab extended_vocab() const;
  int supernode_class(int entry_index) const;
  int entry_of_class(int node_class) const;  // -1 for base-vocab classes
  void validate() const;
  bool operator==(const RingDictionary&) const = default;

  // "dmol-rings-v1"
  nlohmann::json to_json() const;
  static RingDictionary from_json(const nlohmann::json& j);
};

struct SupernodeRecord {
  int node = -1;   // node index in the compressed graph
  int entry = -1;  // dictionary entry it encodes
};

struct CompressedGraph {
  Graph graph;  // over the extended vocab
  std::vector<SupernodeRecord> supernodes;
};

struct DecodeError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// Smallest set of smallest rings: greedily GF(2)-independent simple cycles
// of length 3..8, shortest first, up to the cycle-space rank. Each cycle is
// a vertex sequence starting at its smallest vertex.
std::vector<std::vector<int>> sssr_cycles(const Graph& g);

// Top-k eligible ring signatures by corpus frequency over the SSSR of every
// graph. Fewer than k distinct eligible rings leaves a shortfall count.
RingDictionary mine_rings(std::span<const Graph> dataset, int k,
                          const AtomVocab& atoms, const BondVocab& bonds);

// Greedy non-overlapping replacement of dictionary rings by supernodes,
// highest dictionary rank first, then lowest minimum atom index. Candidates
// with chords, non-single or duplicated external bonds, or more than two
// attachments stay uncompressed.
CompressedGraph compress(const Graph& g, const RingDictionary& dict);

// Expands every supernode back to its ring. Attachments bind by single bonds
// to spare-valence ring carbons: the first to the first spare position, the
// second to the most distant spare position, further ones by descending
// distance. ambiguity_warnings, when given, counts supernodes where several
// spare positions were available so the placement was a canonical choice.
Graph decompress(const Graph& g, const RingDictionary& dict,
                 int* ambiguity_warnings = nullptr);
Graph decompress(const CompressedGraph& cg, const RingDictionary& dict,
                 int* ambiguity_warnings = nullptr);

}  // namespace dmol
