// SPDX-License-Identifier: Apache-2.0

#include "dmol/chem.hpp"

#include <algorithm>
#include <fstream>
#include <map>
#include <set>
#include <stdexcept>
#include <string>
#include <tuple>
#include <utility>

namespace dmol {

namespace {

void check_chem_vocab(const Graph& g, const AtomVocab& atoms,
                      const BondVocab& bonds, const char* op) {
  if (!(g.vocab() == chem_class_vocab(atoms, bonds))) {
    throw std::invalid_argument(std::string(op) +
                                ": graph vocab does not match the chem vocabs");
  }
}

std::vector<char> reachable_from_zero(const Graph& g) {
  int n = g.size();
  std::vector<char> seen(n, 0);
  if (n == 0) return seen;
  std::vector<int> stack = {0};
  seen[0] = 1;
  while (!stack.empty()) {
    int v = stack.back();
    stack.pop_back();
    for (int w = 0; w < n; ++w) {
      if (!seen[w] && g.edge_class(v, w) != g.vocab().no_edge_index) {
        seen[w] = 1;
        stack.push_back(w);
      }
    }
  }
  return seen;
}

std::string bond_symbol(int order, const char* op) {
  switch (order) {
    case 1:
      return "";
    case 2:
      return "=";
    case 3:
      return "#";
    default:
      throw std::invalid_argument(std::string(op) +
                                  ": unsupported bond order " +
                                  std::to_string(order));
  }
}

}  // namespace

void AtomVocab::validate() const {
  if (symbols.empty() || symbols.size() != max_valence.size()) {
    throw std::invalid_argument("AtomVocab: symbols/valences size mismatch");
  }
  std::set<std::string> distinct(symbols.begin(), symbols.end());
  if (distinct.size() != symbols.size()) {
    throw std::invalid_argument("AtomVocab: duplicate symbol");
  }
  for (const std::string& s : symbols) {
    if (s.empty()) throw std::invalid_argument("AtomVocab: empty symbol");
  }
  for (int v : max_valence) {
    if (v < 1) throw std::invalid_argument("AtomVocab: valence must be >= 1");
  }
}

int AtomVocab::index_of(const std::string& symbol) const {
  for (std::size_t i = 0; i < symbols.size(); ++i) {
    if (symbols[i] == symbol) return static_cast<int>(i);
  }
  return -1;
}

void BondVocab::validate() const {
  if (order.size() < 2) {
    throw std::invalid_argument("BondVocab: need no-edge plus a bond class");
  }
  if (no_edge_index < 0 ||
      no_edge_index >= static_cast<int>(order.size()) ||
      order[no_edge_index] != 0) {
    throw std::invalid_argument("BondVocab: no-edge class must have order 0");
  }
  std::set<int> distinct(order.begin(), order.end());
  if (distinct.size() != order.size()) {
    throw std::invalid_argument("BondVocab: duplicate bond order");
  }
  for (std::size_t c = 0; c < order.size(); ++c) {
    if (static_cast<int>(c) != no_edge_index && order[c] < 1) {
      throw std::invalid_argument("BondVocab: bond order must be >= 1");
    }
  }
}

int BondVocab::class_of_order(int bond_order) const {
  for (std::size_t c = 0; c < order.size(); ++c) {
    if (order[c] == bond_order) return static_cast<int>(c);
  }
  return -1;
}

ClassVocab chem_class_vocab(const AtomVocab& atoms, const BondVocab& bonds) {
  atoms.validate();
  bonds.validate();
  return ClassVocab{static_cast<int>(atoms.symbols.size()),
                    static_cast<int>(bonds.order.size()),
                    bonds.no_edge_index};
}

ParseError::ParseError(const std::string& message, std::size_t pos)
    : std::runtime_error(message + " at position " + std::to_string(pos)),
      position(pos) {}

Graph parse_smiles(const std::string& s, const AtomVocab& atoms,
                   const BondVocab& bonds) {
  ClassVocab vocab = chem_class_vocab(atoms, bonds);

  struct PendingRing {
    int atom = -1;
    int order = -1;  // -1 = no bond symbol given at the opening digit
  };
  std::vector<int> node_classes;
  std::vector<std::tuple<int, int, int>> edge_list;  // i, j, class
  std::vector<int> branch_stack;
  std::map<char, PendingRing> open_rings;
  int prev = -1;
  int pending_order = -1;
  std::size_t pending_pos = 0;

  auto add_bond = [&](int i, int j, int bond_order, std::size_t pos) {
    if (i == j) throw ParseError("ring bond closes on the same atom", pos);
    for (const auto& [a, b, c] : edge_list) {
      if ((a == i && b == j) || (a == j && b == i)) {
        throw ParseError("duplicate bond between atoms", pos);
      }
    }
    int cls = bonds.class_of_order(bond_order);
    if (cls < 0) throw ParseError("unsupported bond order", pos);
    edge_list.emplace_back(i, j, cls);
  };

  std::size_t i = 0;
  while (i < s.size()) {
    char ch = s[i];
    if (ch == '(') {
      if (prev < 0) throw ParseError("branch before any atom", i);
      if (pending_order != -1) {
        throw ParseError("dangling bond symbol", pending_pos);
      }
      branch_stack.push_back(prev);
      ++i;
      continue;
    }
    if (ch == ')') {
      if (branch_stack.empty()) throw ParseError("unbalanced ')'", i);
      if (pending_order != -1) {
        throw ParseError("dangling bond symbol", pending_pos);
      }
      prev = branch_stack.back();
      branch_stack.pop_back();
      ++i;
      continue;
    }
    if (ch == '-' || ch == '=' || ch == '#') {
      if (prev < 0) throw ParseError("bond symbol before any atom", i);
      if (pending_order != -1) throw ParseError("doubled bond symbol", i);
      pending_order = ch == '-' ? 1 : ch == '=' ? 2 : 3;
      pending_pos = i;
      ++i;
      continue;
    }
    if (ch >= '1' && ch <= '9') {
      if (prev < 0) throw ParseError("ring digit before any atom", i);
      auto it = open_rings.find(ch);
      if (it == open_rings.end()) {
        open_rings.emplace(ch, PendingRing{prev, pending_order});
      } else {
        PendingRing open = it->second;
        open_rings.erase(it);
        int bond_order = 1;
        if (open.order != -1 && pending_order != -1 &&
            open.order != pending_order) {
          throw ParseError("conflicting bond symbols on ring closure", i);
        }
        if (open.order != -1) bond_order = open.order;
        if (pending_order != -1) bond_order = pending_order;
        add_bond(open.atom, prev, bond_order, i);
      }
      pending_order = -1;
      ++i;
      continue;
    }
    // atom symbol, longest match against the vocab
    int best = -1;
    std::size_t best_len = 0;
    for (std::size_t a = 0; a < atoms.symbols.size(); ++a) {
      const std::string& sym = atoms.symbols[a];
      if (sym.size() > best_len && s.compare(i, sym.size(), sym) == 0) {
        best = static_cast<int>(a);
        best_len = sym.size();
      }
    }
    if (best < 0) {
      throw ParseError(std::string("unsupported token '") + ch + "'", i);
    }
    int atom_index = static_cast<int>(node_classes.size());
    node_classes.push_back(best);
    if (prev >= 0) {
      add_bond(prev, atom_index, pending_order == -1 ? 1 : pending_order, i);
    }
    pending_order = -1;
    prev = atom_index;
    i += best_len;
  }
  if (pending_order != -1) {
    throw ParseError("dangling bond symbol at end of input", pending_pos);
  }
  if (!branch_stack.empty()) throw ParseError("unclosed '('", s.size());
  if (!open_rings.empty()) throw ParseError("unclosed ring bond", s.size());
  if (node_classes.empty()) throw ParseError("no atoms", 0);

  Graph g(static_cast<int>(node_classes.size()), vocab);
  for (std::size_t v = 0; v < node_classes.size(); ++v) {
    g.set_node_class(static_cast<int>(v), node_classes[v]);
  }
  for (const auto& [a, b, c] : edge_list) g.set_edge_class(a, b, c);
  return g;
}

std::string write_smiles(const Graph& g, const AtomVocab& atoms,
                         const BondVocab& bonds) {
  check_chem_vocab(g, atoms, bonds, "write_smiles");
  g.validate();
  int n = g.size();
  if (n == 0) throw std::invalid_argument("write_smiles: empty graph");
  std::vector<char> seen = reachable_from_zero(g);
  if (std::count(seen.begin(), seen.end(), 1) != n) {
    throw std::invalid_argument("write_smiles: graph is disconnected");
  }

  int no_edge = g.vocab().no_edge_index;
  std::vector<int> disc(n, -1);
  std::vector<std::vector<int>> children(n);
  std::vector<std::vector<int>> opens_at(n);   // v -> descendants closing here
  std::vector<std::vector<int>> closes_at(n);  // v -> ancestors it closes to
  int timer = 0;
  auto dfs = [&](auto&& self, int v, int parent) -> void {
    disc[v] = timer++;
    for (int w = 0; w < n; ++w) {
      if (w == v || g.edge_class(v, w) == no_edge) continue;
      if (disc[w] == -1) {
        children[v].push_back(w);
        self(self, w, v);
      } else if (w != parent && disc[w] < disc[v]) {
        opens_at[w].push_back(v);
        closes_at[v].push_back(w);
      }
    }
  };
  dfs(dfs, 0, -1);

  std::map<std::pair<int, int>, int> ring_digit;  // (ancestor, descendant)
  std::vector<char> digit_free(10, 1);
  std::string out;
  auto emit = [&](auto&& self, int v) -> void {
    out += atoms.symbols[g.node_class(v)];
    for (int anc : closes_at[v]) {
      auto it = ring_digit.find({anc, v});
      out += bond_symbol(bonds.order[g.edge_class(v, anc)], "write_smiles");
      out += static_cast<char>('0' + it->second);
      digit_free[it->second] = 1;
    }
    for (int desc : opens_at[v]) {
      int d = 1;
      while (d <= 9 && !digit_free[d]) ++d;
      if (d > 9) {
        throw std::invalid_argument(
            "write_smiles: more than nine simultaneously open rings");
      }
      digit_free[d] = 0;
      ring_digit[{v, desc}] = d;
      out += bond_symbol(bonds.order[g.edge_class(v, desc)], "write_smiles");
      out += static_cast<char>('0' + d);
    }
    for (std::size_t k = 0; k < children[v].size(); ++k) {
      int w = children[v][k];
      std::string bond =
          bond_symbol(bonds.order[g.edge_class(v, w)], "write_smiles");
      if (k + 1 < children[v].size()) {
        out += "(" + bond;
        self(self, w);
        out += ")";
      } else {
        out += bond;
        self(self, w);
      }
    }
  };
  emit(emit, 0);
  return out;
}

ValidityReport check_validity(const Graph& g, const AtomVocab& atoms,
                              const BondVocab& bonds, bool require_connected) {
  check_chem_vocab(g, atoms, bonds, "check_validity");
  int n = g.size();
  ValidityReport rep;
  rep.atoms.resize(n);
  bool valences_ok = true;
  for (int i = 0; i < n; ++i) {
    int sum = 0;
    for (int j = 0; j < n; ++j) {
      if (j != i) sum += bonds.order[g.edge_class(i, j)];
    }
    AtomDiagnostic& d = rep.atoms[i];
    d.bond_order_sum = sum;
    d.max_valence = atoms.max_valence[g.node_class(i)];
    d.ok = sum <= d.max_valence;
    valences_ok = valences_ok && d.ok;
  }
  rep.valence_valid = n >= 1 && valences_ok;
  std::vector<char> seen = reachable_from_zero(g);
  rep.connected =
      n >= 1 && std::count(seen.begin(), seen.end(), 1) == n;
  rep.valid = require_connected ? (rep.valence_valid && rep.connected)
                                : rep.valence_valid;
  return rep;
}

namespace {

std::vector<int> refinement_colors(const Graph& g) {
  int n = g.size();
  int no_edge = g.vocab().no_edge_index;
  std::vector<int> color(n);
  for (int i = 0; i < n; ++i) color[i] = g.node_class(i);
  int distinct = -1;
  while (true) {
    std::vector<std::vector<int>> sig(n);
    for (int i = 0; i < n; ++i) {
      sig[i].push_back(color[i]);
      std::vector<std::pair<int, int>> nbrs;
      for (int j = 0; j < n; ++j) {
        if (j != i && g.edge_class(i, j) != no_edge) {
          nbrs.emplace_back(g.edge_class(i, j), color[j]);
        }
      }
      std::sort(nbrs.begin(), nbrs.end());
      for (const auto& [c, col] : nbrs) {
        sig[i].push_back(c);
        sig[i].push_back(col);
      }
    }
    std::vector<std::vector<int>> ranked(sig.begin(), sig.end());
    std::sort(ranked.begin(), ranked.end());
    ranked.erase(std::unique(ranked.begin(), ranked.end()), ranked.end());
    for (int i = 0; i < n; ++i) {
      color[i] = static_cast<int>(
          std::lower_bound(ranked.begin(), ranked.end(), sig[i]) -
          ranked.begin());
    }
    int now = static_cast<int>(ranked.size());
    if (now == distinct) break;
    distinct = now;
  }
  return color;
}

}  // namespace

std::string canonical_hash(const Graph& g) {
  g.validate();
  int n = g.size();
  std::vector<int> wl = refinement_colors(g);

  // Canonical order minimizes the concatenated per-position encoding
  // [node class | edge classes to the already-placed prefix]; refinement
  // colors narrow the candidate set and ties branch exhaustively.
  std::vector<int> placed;
  std::vector<char> used(n, 0);
  std::vector<int> current;
  std::vector<int> best;
  bool have_best = false;

  // `tied` = the encoding so far equals the incumbent's prefix, so larger
  // extensions can be pruned; once strictly smaller, descendants always win
  // the comparison at the leaf.
  auto search = [&](auto&& self, bool tied) -> void {
    std::size_t depth = placed.size();
    if (depth == static_cast<std::size_t>(n)) {
      if (!have_best || current < best) {
        best = current;
        have_best = true;
      }
      return;
    }
    std::vector<int> best_key;
    std::vector<int> candidates;
    for (int v = 0; v < n; ++v) {
      if (used[v]) continue;
      std::vector<int> key;
      key.reserve(depth + 2);
      key.push_back(wl[v]);
      key.push_back(g.node_class(v));
      for (int p : placed) key.push_back(g.edge_class(v, p));
      if (candidates.empty() || key < best_key) {
        best_key = std::move(key);
        candidates.assign(1, v);
      } else if (key == best_key) {
        candidates.push_back(v);
      }
    }
    std::size_t mark = current.size();
    // shared extension for every tied candidate: class then prefix edges
    current.insert(current.end(), best_key.begin() + 1, best_key.end());
    bool child_tied = tied;
    if (have_best && tied) {
      for (std::size_t i = mark; i < current.size(); ++i) {
        if (current[i] > best[i]) {
          current.resize(mark);
          return;
        }
        if (current[i] < best[i]) {
          child_tied = false;
          break;
        }
      }
    }
    for (int v : candidates) {
      used[v] = 1;
      placed.push_back(v);
      self(self, child_tied);
      placed.pop_back();
      used[v] = 0;
    }
    current.resize(mark);
  };
  search(search, true);

  const ClassVocab& vocab = g.vocab();
  std::string digest = "dmol-canon-v1|" +
                       std::to_string(vocab.node_class_count) + "," +
                       std::to_string(vocab.edge_class_count) + "," +
                       std::to_string(vocab.no_edge_index) + "|" +
                       std::to_string(n) + "|";
  for (std::size_t i = 0; i < best.size(); ++i) {
    if (i) digest += ",";
    digest += std::to_string(best[i]);
  }
  return digest;
}

LoadedDataset load_dataset(const std::string& path, const AtomVocab& atoms,
                           const BondVocab& bonds) {
  ClassVocab vocab = chem_class_vocab(atoms, bonds);
  std::ifstream in(path);
  if (!in) {
    throw std::runtime_error("load_dataset: cannot open " + path);
  }
  LoadedDataset out;
  std::string line;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    std::size_t b = line.find_first_not_of(" \t\r\n");
    if (b == std::string::npos) continue;
    std::size_t e = line.find_last_not_of(" \t\r\n");
    std::string body = line.substr(b, e - b + 1);
    if (body[0] == '#') continue;
    try {
      if (body[0] == '{') {
        out.graphs.push_back(
            Graph::from_json(nlohmann::json::parse(body), vocab));
      } else {
        out.graphs.push_back(parse_smiles(body, atoms, bonds));
      }
    } catch (const std::exception& ex) {
      ++out.skipped;
      out.line_errors.push_back("line " + std::to_string(lineno) + ": " +
                                ex.what());
    }
  }
  if (!out.graphs.empty()) {
    for (const Graph& g : out.graphs) {
      out.node_count_distribution[g.size()] += 1.0;
    }
    for (auto& [count, p] : out.node_count_distribution) {
      p /= static_cast<double>(out.graphs.size());
    }
  }
  return out;
}

}  // namespace dmol
