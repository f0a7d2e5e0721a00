// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <span>
#include <string>
#include <utility>
#include <vector>

#include <json.hpp>

#include "dmol/rng.hpp"

namespace dmol {

/// Size of the categorical label spaces. The edge vocabulary always contains
/// an explicit "no edge" class, so a pair without a bond still has a label.
struct ClassVocab {
  int node_class_count = 0;  ///< a
  int edge_class_count = 0;  ///< b, including the no-edge class
  int no_edge_index = 0;

  void validate() const;
  bool operator==(const ClassVocab&) const = default;
};

/// Undirected categorical graph: one class index per node, one per unordered
/// node pair. The edge matrix keeps both triangles in lock-step and the
/// diagonal is pinned to no-edge (molecules have no self-bonds).
class Graph {
 public:
  Graph() = default;
  Graph(int n, ClassVocab vocab);

  int size() const { return n_; }
  const ClassVocab& vocab() const { return vocab_; }

  int node_class(int i) const;
  int edge_class(int i, int j) const;
  void set_node_class(int i, int c);
  void set_edge_class(int i, int j, int c);

  std::span<const int> node_classes() const { return node_classes_; }

  /// Throws std::invalid_argument if any invariant is broken.
  void validate() const;

  bool operator==(const Graph&) const = default;

  /// "dmol-graph-v1": {"format", "n", "nodes", "edges": [[i, j, class]...]}
  /// with i<j and only non-no-edge pairs listed.
  nlohmann::json to_json() const;
  static Graph from_json(const nlohmann::json& j, const ClassVocab& vocab);

 private:
  void check_node(int i) const;

  int n_ = 0;
  ClassVocab vocab_{};
  std::vector<int> node_classes_;
  std::vector<int> edge_classes_;  // n*n row-major
};

/// Bijection on [0, n).
class Permutation {
 public:
  explicit Permutation(std::vector<int> mapping);
  static Permutation identity(int n);
  static Permutation random(int n, RngStream& rng);

  int size() const { return static_cast<int>(mapping_.size()); }
  int operator()(int i) const { return mapping_[i]; }
  const std::vector<int>& mapping() const { return mapping_; }
  Permutation inverse() const;

 private:
  std::vector<int> mapping_;
};

/// Indicator of the node and edge slots that receive resampled labels.
/// Pairs are unordered (stored i<j) with distinct endpoints. In the default
/// noising mode every pair lies inside the selected-node induced subgraph;
/// whole-graph edge selection deliberately drops that property, so it is
/// checked by edges_within_nodes() rather than enforced here.
struct SelectionMask {
  std::vector<int> nodes;                     // sorted, unique
  std::vector<std::pair<int, int>> edges;     // sorted, i<j, unique

  bool empty() const { return nodes.empty() && edges.empty(); }
  bool edges_within_nodes() const;

  /// Bounds, ordering and uniqueness checks against a graph of size n.
  void validate(int n) const;
};

/// Relabels: output node i takes the class of input node p(i).
Graph apply_permutation(const Graph& g, const Permutation& p);

/// Number of positions with differing node classes. Sizes must match.
int hamming_nodes(const Graph& g1, const Graph& g2);

/// Number of unordered pairs {i,j}, i<j, with differing edge classes.
int hamming_edges(const Graph& g1, const Graph& g2);

/// Copy of `base` with the masked node/edge slots taken from `source`.
Graph splice(const Graph& base, const Graph& source, const SelectionMask& mask);

/// All unordered pairs over the given node set (the complete induced
/// subgraph; absence of an edge is itself a class, so every pair counts).
std::vector<std::pair<int, int>> induced_pairs(std::span<const int> nodes);

}  // namespace dmol
