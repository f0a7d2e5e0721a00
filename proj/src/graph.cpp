// SPDX-License-Identifier: Apache-2.0

#include "dmol/graph.hpp"

#include <algorithm>
#include <stdexcept>

namespace dmol {

void ClassVocab::validate() const {
  if (node_class_count < 1) {
    throw std::invalid_argument("ClassVocab: node_class_count must be >= 1");
  }
  if (edge_class_count < 2) {
    throw std::invalid_argument(
        "ClassVocab: edge_class_count must be >= 2 (no-edge plus one bond)");
  }
  if (no_edge_index < 0 || no_edge_index >= edge_class_count) {
    throw std::invalid_argument("ClassVocab: no_edge_index out of range");
  }
}

Graph::Graph(int n, ClassVocab vocab) : n_(n), vocab_(vocab) {
  if (n < 0) throw std::invalid_argument("Graph: negative node count");
  vocab_.validate();
  node_classes_.assign(n_, 0);
  edge_classes_.assign(static_cast<std::size_t>(n_) * n_, vocab_.no_edge_index);
}

void Graph::check_node(int i) const {
  if (i < 0 || i >= n_) throw std::out_of_range("Graph: node index out of range");
}

int Graph::node_class(int i) const {
  check_node(i);
  return node_classes_[i];
}

int Graph::edge_class(int i, int j) const {
  check_node(i);
  check_node(j);
  return edge_classes_[static_cast<std::size_t>(i) * n_ + j];
}

void Graph::set_node_class(int i, int c) {
  check_node(i);
  if (c < 0 || c >= vocab_.node_class_count) {
    throw std::out_of_range("Graph: node class out of range");
  }
  node_classes_[i] = c;
}

void Graph::set_edge_class(int i, int j, int c) {
  check_node(i);
  check_node(j);
  if (c < 0 || c >= vocab_.edge_class_count) {
    throw std::out_of_range("Graph: edge class out of range");
  }
  if (i == j && c != vocab_.no_edge_index) {
    throw std::invalid_argument("Graph: self-edges are forbidden");
  }
  edge_classes_[static_cast<std::size_t>(i) * n_ + j] = c;
  edge_classes_[static_cast<std::size_t>(j) * n_ + i] = c;
}

void Graph::validate() const {
  vocab_.validate();
  for (int i = 0; i < n_; ++i) {
    if (node_classes_[i] < 0 || node_classes_[i] >= vocab_.node_class_count) {
      throw std::invalid_argument("Graph: node class out of vocab");
    }
  }
  for (int i = 0; i < n_; ++i) {
    if (edge_class(i, i) != vocab_.no_edge_index) {
      throw std::invalid_argument("Graph: diagonal must be no-edge");
    }
    for (int j = i + 1; j < n_; ++j) {
      int c = edge_class(i, j);
      if (c < 0 || c >= vocab_.edge_class_count) {
        throw std::invalid_argument("Graph: edge class out of vocab");
      }
      if (c != edge_class(j, i)) {
        throw std::invalid_argument("Graph: edge matrix not symmetric");
      }
    }
  }
}

nlohmann::json Graph::to_json() const {
  nlohmann::json j;
  j["format"] = "dmol-graph-v1";
  j["n"] = n_;
  j["nodes"] = node_classes_;
  nlohmann::json edges = nlohmann::json::array();
  for (int i = 0; i < n_; ++i) {
    for (int k = i + 1; k < n_; ++k) {
      int c = edge_class(i, k);
      if (c != vocab_.no_edge_index) {
        edges.push_back(nlohmann::json::array({i, k, c}));
      }
    }
  }
  j["edges"] = std::move(edges);
  return j;
}

Graph Graph::from_json(const nlohmann::json& j, const ClassVocab& vocab) {
  if (!j.contains("format") || j.at("format") != "dmol-graph-v1") {
    throw std::invalid_argument("Graph::from_json: not a dmol-graph-v1 object");
  }
  int n = j.at("n").get<int>();
  Graph g(n, vocab);
  const auto& nodes = j.at("nodes");
  if (static_cast<int>(nodes.size()) != n) {
    throw std::invalid_argument("Graph::from_json: node list size mismatch");
  }
  for (int i = 0; i < n; ++i) g.set_node_class(i, nodes.at(i).get<int>());
  for (const auto& e : j.at("edges")) {
    if (e.size() != 3) {
      throw std::invalid_argument("Graph::from_json: edge entry must be [i,j,class]");
    }
    g.set_edge_class(e.at(0).get<int>(), e.at(1).get<int>(), e.at(2).get<int>());
  }
  g.validate();
  return g;
}

Permutation::Permutation(std::vector<int> mapping) : mapping_(std::move(mapping)) {
  int n = static_cast<int>(mapping_.size());
  std::vector<bool> seen(n, false);
  for (int v : mapping_) {
    if (v < 0 || v >= n || seen[v]) {
      throw std::invalid_argument("Permutation: mapping is not a bijection");
    }
    seen[v] = true;
  }
}

Permutation Permutation::identity(int n) {
  std::vector<int> m(n);
  for (int i = 0; i < n; ++i) m[i] = i;
  return Permutation(std::move(m));
}

Permutation Permutation::random(int n, RngStream& rng) {
  std::vector<int> m(n);
  for (int i = 0; i < n; ++i) m[i] = i;
  for (int i = n - 1; i > 0; --i) {
    int j = static_cast<int>(rng.next_below(static_cast<std::uint64_t>(i) + 1));
    std::swap(m[i], m[j]);
  }
  return Permutation(std::move(m));
}

Permutation Permutation::inverse() const {
  std::vector<int> inv(mapping_.size());
  for (int i = 0; i < size(); ++i) inv[mapping_[i]] = i;
  return Permutation(std::move(inv));
}

bool SelectionMask::edges_within_nodes() const {
  for (const auto& [u, v] : edges) {
    if (!std::binary_search(nodes.begin(), nodes.end(), u) ||
        !std::binary_search(nodes.begin(), nodes.end(), v)) {
      return false;
    }
  }
  return true;
}

void SelectionMask::validate(int n) const {
  for (std::size_t i = 0; i < nodes.size(); ++i) {
    if (nodes[i] < 0 || nodes[i] >= n) {
      throw std::out_of_range("SelectionMask: node index out of range");
    }
    if (i > 0 && nodes[i] <= nodes[i - 1]) {
      throw std::invalid_argument("SelectionMask: nodes must be sorted unique");
    }
  }
  for (std::size_t i = 0; i < edges.size(); ++i) {
    const auto& [u, v] = edges[i];
    if (u < 0 || v < 0 || u >= n || v >= n) {
      throw std::out_of_range("SelectionMask: edge index out of range");
    }
    if (u >= v) {
      throw std::invalid_argument("SelectionMask: pairs must satisfy i < j");
    }
    if (i > 0 && edges[i] <= edges[i - 1]) {
      throw std::invalid_argument("SelectionMask: pairs must be sorted unique");
    }
  }
}

Graph apply_permutation(const Graph& g, const Permutation& p) {
  if (p.size() != g.size()) {
    throw std::invalid_argument("apply_permutation: size mismatch");
  }
  Graph out(g.size(), g.vocab());
  for (int i = 0; i < g.size(); ++i) out.set_node_class(i, g.node_class(p(i)));
  for (int i = 0; i < g.size(); ++i) {
    for (int j = i + 1; j < g.size(); ++j) {
      out.set_edge_class(i, j, g.edge_class(p(i), p(j)));
    }
  }
  return out;
}

int hamming_nodes(const Graph& g1, const Graph& g2) {
  if (g1.size() != g2.size()) {
    throw std::invalid_argument("hamming_nodes: size mismatch");
  }
  int count = 0;
  for (int i = 0; i < g1.size(); ++i) {
    if (g1.node_class(i) != g2.node_class(i)) ++count;
  }
  return count;
}

int hamming_edges(const Graph& g1, const Graph& g2) {
  if (g1.size() != g2.size()) {
    throw std::invalid_argument("hamming_edges: size mismatch");
  }
  int count = 0;
  for (int i = 0; i < g1.size(); ++i) {
    for (int j = i + 1; j < g1.size(); ++j) {
      if (g1.edge_class(i, j) != g2.edge_class(i, j)) ++count;
    }
  }
  return count;
}

Graph splice(const Graph& base, const Graph& source, const SelectionMask& mask) {
  if (base.size() != source.size()) {
    throw std::invalid_argument("splice: size mismatch");
  }
  mask.validate(base.size());
  Graph out = base;
  for (int i : mask.nodes) out.set_node_class(i, source.node_class(i));
  for (const auto& [u, v] : mask.edges) {
    out.set_edge_class(u, v, source.edge_class(u, v));
  }
  return out;
}

std::vector<std::pair<int, int>> induced_pairs(std::span<const int> nodes) {
  std::vector<std::pair<int, int>> pairs;
  pairs.reserve(nodes.size() * (nodes.size() + 1) / 2);
  for (std::size_t a = 0; a < nodes.size(); ++a) {
    for (std::size_t b = a + 1; b < nodes.size(); ++b) {
      int u = nodes[a];
      int v = nodes[b];
      if (u == v) throw std::invalid_argument("induced_pairs: duplicate node");
      pairs.emplace_back(std::min(u, v), std::max(u, v));
    }
  }
  std::sort(pairs.begin(), pairs.end());
  return pairs;
}

}  // namespace dmol
