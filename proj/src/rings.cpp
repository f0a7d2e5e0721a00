// SPDX-License-Identifier: Apache-2.0

#include "dmol/rings.hpp"

#include <algorithm>
#include <bit>
#include <cstdint>
#include <functional>
#include <map>
#include <set>
#include <utility>

namespace dmol {
namespace {

using nlohmann::json;

bool ring_seq_less(const std::vector<int>& a1, const std::vector<int>& b1,
                   const std::vector<int>& a2, const std::vector<int>& b2) {
  // Interleaved lexicographic order: atom 0, bond 0, atom 1, bond 1, ...
  for (std::size_t i = 0; i < a1.size(); ++i) {
    if (a1[i] != a2[i]) return a1[i] < a2[i];
    if (b1[i] != b2[i]) return b1[i] < b2[i];
  }
  return false;
}

// Every simple cycle of length 3..max_len, once each: vertex sequences
// starting at the smallest vertex with path[1] < path.back().
std::vector<std::vector<int>> simple_cycles_up_to(const Graph& g,
                                                  int max_len) {
  const int n = g.size();
  const int ne = g.vocab().no_edge_index;
  std::vector<std::vector<int>> adj(n);
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j)
      if (i != j && g.edge_class(i, j) != ne) adj[i].push_back(j);

  std::vector<std::vector<int>> out;
  std::vector<int> path;
  std::vector<char> on_path(n, 0);
  std::function<void(int, int)> dfs = [&](int start, int v) {
    for (int w : adj[v]) {
      if (w == start && path.size() >= 3 && path[1] < path.back())
        out.push_back(path);
      if (w <= start || on_path[w]) continue;
      if (static_cast<int>(path.size()) >= max_len) continue;
      on_path[w] = 1;
      path.push_back(w);
      dfs(start, w);
      on_path[w] = 0;
      path.pop_back();
    }
  };
  for (int s = 0; s < n; ++s) {
    path.assign(1, s);
    on_path[s] = 1;
    dfs(s, s);
    on_path[s] = 0;
  }
  return out;
}

RingSignature cycle_signature(const Graph& g, const std::vector<int>& path) {
  const int s = static_cast<int>(path.size());
  std::vector<int> a(s), b(s);
  for (int i = 0; i < s; ++i) {
    a[i] = g.node_class(path[i]);
    b[i] = g.edge_class(path[i], path[(i + 1) % s]);
  }
  return RingSignature::canonical(std::move(a), std::move(b));
}

// Position maps of the dihedral group that preserve the signature.
std::vector<std::vector<int>> ring_symmetries(const RingSignature& sig) {
  const int s = sig.size;
  const auto& a = sig.atom_sequence;
  const auto& b = sig.bond_sequence;
  std::vector<std::vector<int>> maps;
  for (int k = 0; k < s; ++k) {
    bool ok = true;
    for (int i = 0; i < s && ok; ++i)
      ok = a[(i + k) % s] == a[i] && b[(i + k) % s] == b[i];
    if (!ok) continue;
    std::vector<int> p(s);
    for (int i = 0; i < s; ++i) p[i] = (i + k) % s;
    maps.push_back(std::move(p));
  }
  for (int k = 0; k < s; ++k) {
    bool ok = true;
    for (int i = 0; i < s && ok; ++i)
      ok = a[(k - i + s) % s] == a[i] && b[(k - i - 1 + 2 * s) % s] == b[i];
    if (!ok) continue;
    std::vector<int> p(s);
    for (int i = 0; i < s; ++i) p[i] = (k - i + s) % s;
    maps.push_back(std::move(p));
  }
  return maps;
}

// Ring positions that keep a spare valence after their two ring bonds.
std::vector<int> spare_positions(const RingSignature& sig,
                                 const AtomVocab& atoms,
                                 const BondVocab& bonds) {
  const int s = sig.size;
  std::vector<int> out;
  for (int i = 0; i < s; ++i) {
    int mv = atoms.max_valence[sig.atom_sequence[i]];
    int prev = bonds.order[sig.bond_sequence[(i + s - 1) % s]];
    int next = bonds.order[sig.bond_sequence[i]];
    if (mv - prev - next >= 1) out.push_back(i);
  }
  return out;
}

// True when every candidate position can be mapped to every other by a
// signature symmetry that keeps the already-assigned positions in place.
bool single_orbit(const std::vector<int>& candidates,
                  const std::vector<std::vector<int>>& maps,
                  const std::vector<int>& fixed) {
  if (candidates.size() <= 1) return true;
  std::vector<const std::vector<int>*> usable;
  for (const auto& p : maps) {
    bool ok = true;
    for (int f : fixed)
      if (p[f] != f) {
        ok = false;
        break;
      }
    if (ok) usable.push_back(&p);
  }
  std::set<int> cand(candidates.begin(), candidates.end());
  std::set<int> seen{candidates.front()};
  std::vector<int> queue{candidates.front()};
  while (!queue.empty()) {
    int v = queue.back();
    queue.pop_back();
    for (const auto* p : usable) {
      int w = (*p)[v];
      if (cand.count(w) && !seen.count(w)) {
        seen.insert(w);
        queue.push_back(w);
      }
    }
  }
  return seen.size() == cand.size();
}

int ring_distance(int i, int j, int s) {
  int d = i > j ? i - j : j - i;
  return std::min(d, s - d);
}

std::pair<int, int> ordered(int x, int y) {
  return {std::min(x, y), std::max(x, y)};
}

}  // namespace

RingSignature RingSignature::canonical(std::vector<int> atom_seq,
                                       std::vector<int> bond_seq) {
  if (atom_seq.size() != bond_seq.size())
    throw std::invalid_argument("ring signature: sequence length mismatch");
  const int s = static_cast<int>(atom_seq.size());
  if (s < 3) throw std::invalid_argument("ring signature: size below 3");

  std::vector<int> ratoms(s), rbonds(s);
  for (int i = 0; i < s; ++i) {
    ratoms[i] = atom_seq[(s - i) % s];
    rbonds[i] = bond_seq[s - 1 - i];
  }

  std::vector<int> best_a = atom_seq, best_b = bond_seq;
  auto consider = [&](const std::vector<int>& a, const std::vector<int>& b) {
    for (int k = 0; k < s; ++k) {
      std::vector<int> ca(s), cb(s);
      for (int i = 0; i < s; ++i) {
        ca[i] = a[(i + k) % s];
        cb[i] = b[(i + k) % s];
      }
      if (ring_seq_less(ca, cb, best_a, best_b)) {
        best_a = std::move(ca);
        best_b = std::move(cb);
      }
    }
  };
  consider(atom_seq, bond_seq);
  consider(ratoms, rbonds);

  RingSignature out;
  out.size = s;
  out.atom_sequence = std::move(best_a);
  out.bond_sequence = std::move(best_b);
  return out;
}

void RingSignature::validate() const {
  if (size < 3) throw std::invalid_argument("ring signature: size below 3");
  if (static_cast<int>(atom_sequence.size()) != size ||
      static_cast<int>(bond_sequence.size()) != size)
    throw std::invalid_argument("ring signature: sequence length mismatch");
  for (int c : atom_sequence)
    if (c < 0) throw std::invalid_argument("ring signature: negative class");
  for (int c : bond_sequence)
    if (c < 0) throw std::invalid_argument("ring signature: negative class");
  RingSignature canon = canonical(atom_sequence, bond_sequence);
  if (canon != *this)
    throw std::invalid_argument("ring signature: not in canonical form");
}

json RingSignature::to_json() const {
  return json{{"size", size},
              {"atoms", atom_sequence},
              {"bonds", bond_sequence}};
}

RingSignature RingSignature::from_json(const json& j) {
  RingSignature sig;
  sig.size = j.at("size").get<int>();
  sig.atom_sequence = j.at("atoms").get<std::vector<int>>();
  sig.bond_sequence = j.at("bonds").get<std::vector<int>>();
  sig.validate();
  return sig;
}

bool ring_eligible(const RingSignature& sig, const AtomVocab& atoms,
                   const BondVocab& bonds) {
  sig.validate();
  const int carbon = atoms.index_of("C");
  if (carbon < 0) return false;
  for (int c : sig.atom_sequence)
    if (c != carbon) return false;
  const int b = static_cast<int>(bonds.order.size());
  for (int c : sig.bond_sequence)
    if (c >= b || c == bonds.no_edge_index) return false;
  const int s = sig.size;
  for (int i = 0; i < s; ++i) {
    int prev = bonds.order[sig.bond_sequence[(i + s - 1) % s]];
    int next = bonds.order[sig.bond_sequence[i]];
    int spare = atoms.max_valence[carbon] - prev - next;
    if (spare < 0 || spare > 1) return false;
  }
  return true;
}

ClassVocab RingDictionary::base_vocab() const {
  return chem_class_vocab(atoms, bonds);
}

ClassVocab RingDictionary::extended_vocab() const {
  ClassVocab v = base_vocab();
  v.node_class_count += static_cast<int>(entries.size());
  return v;
}

int RingDictionary::supernode_class(int entry_index) const {
  if (entry_index < 0 || entry_index >= static_cast<int>(entries.size()))
    throw std::out_of_range("ring dictionary: entry index out of range");
  return static_cast<int>(atoms.symbols.size()) + entry_index;
}

int RingDictionary::entry_of_class(int node_class) const {
  const int a = static_cast<int>(atoms.symbols.size());
  if (node_class < a) return -1;
  const int e = node_class - a;
  if (e >= static_cast<int>(entries.size()))
    throw std::out_of_range("ring dictionary: node class out of range");
  return e;
}

void RingDictionary::validate() const {
  atoms.validate();
  bonds.validate();
  if (shortfall < 0)
    throw std::invalid_argument("ring dictionary: negative shortfall");
  for (const auto& e : entries) {
    e.validate();
    if (!ring_eligible(e, atoms, bonds))
      throw std::invalid_argument("ring dictionary: ineligible entry");
  }
  std::set<RingSignature> distinct(entries.begin(), entries.end());
  if (distinct.size() != entries.size())
    throw std::invalid_argument("ring dictionary: duplicate entries");
}

json RingDictionary::to_json() const {
  json j;
  j["format"] = "dmol-rings-v1";
  j["atoms"] = json{{"symbols", atoms.symbols},
                    {"max_valence", atoms.max_valence}};
  j["bonds"] =
      json{{"order", bonds.order}, {"no_edge_index", bonds.no_edge_index}};
  j["shortfall"] = shortfall;
  j["entries"] = json::array();
  for (const auto& e : entries) j["entries"].push_back(e.to_json());
  return j;
}

RingDictionary RingDictionary::from_json(const json& j) {
  if (j.at("format").get<std::string>() != "dmol-rings-v1")
    throw std::runtime_error("ring dictionary: unsupported format");
  RingDictionary dict;
  dict.atoms.symbols = j.at("atoms").at("symbols").get<std::vector<std::string>>();
  dict.atoms.max_valence = j.at("atoms").at("max_valence").get<std::vector<int>>();
  dict.bonds.order = j.at("bonds").at("order").get<std::vector<int>>();
  dict.bonds.no_edge_index = j.at("bonds").at("no_edge_index").get<int>();
  dict.shortfall = j.at("shortfall").get<int>();
  for (const auto& e : j.at("entries")) {
    dict.entries.push_back(RingSignature::from_json(e));
  }
  dict.validate();
  return dict;
}

std::vector<std::vector<int>> sssr_cycles(const Graph& g) {
  const int n = g.size();
  const int ne = g.vocab().no_edge_index;

  int m = 0;
  for (int i = 0; i < n; ++i)
    for (int j = i + 1; j < n; ++j)
      if (g.edge_class(i, j) != ne) ++m;

  int comps = 0;
  std::vector<char> seen(n, 0);
  for (int s = 0; s < n; ++s) {
    if (seen[s]) continue;
    ++comps;
    std::vector<int> queue{s};
    seen[s] = 1;
    while (!queue.empty()) {
      int v = queue.back();
      queue.pop_back();
      for (int w = 0; w < n; ++w)
        if (w != v && g.edge_class(v, w) != ne && !seen[w]) {
          seen[w] = 1;
          queue.push_back(w);
        }
    }
  }

  const int rank = m - n + comps;
  if (rank <= 0) return {};

  auto cycles = simple_cycles_up_to(g, 8);
  std::sort(cycles.begin(), cycles.end(),
            [](const std::vector<int>& x, const std::vector<int>& y) {
              if (x.size() != y.size()) return x.size() < y.size();
              return x < y;
            });

  const int bits = n * n;
  const int words = (bits + 63) / 64;
  auto cycle_bits = [&](const std::vector<int>& c) {
    std::vector<std::uint64_t> v(words, 0);
    for (std::size_t i = 0; i < c.size(); ++i) {
      auto [lo, hi] = ordered(c[i], c[(i + 1) % c.size()]);
      int bit = lo * n + hi;
      v[bit / 64] ^= std::uint64_t{1} << (bit % 64);
    }
    return v;
  };
  auto top_bit = [&](const std::vector<std::uint64_t>& v) {
    for (int w = words - 1; w >= 0; --w)
      if (v[w] != 0) return w * 64 + 63 - std::countl_zero(v[w]);
    return -1;
  };

  std::vector<std::pair<int, std::vector<std::uint64_t>>> basis;  // pivot, row
  std::vector<std::vector<int>> chosen;
  for (const auto& c : cycles) {
    if (static_cast<int>(chosen.size()) == rank) break;
    auto v = cycle_bits(c);
    for (const auto& [pivot, row] : basis) {
      if ((v[pivot / 64] >> (pivot % 64)) & 1)
        for (int w = 0; w < words; ++w) v[w] ^= row[w];
    }
    int pivot = top_bit(v);
    if (pivot < 0) continue;
    basis.emplace_back(pivot, std::move(v));
    chosen.push_back(c);
  }
  return chosen;
}

RingDictionary mine_rings(std::span<const Graph> dataset, int k,
                          const AtomVocab& atoms, const BondVocab& bonds) {
  if (k < 0) throw std::invalid_argument("mine_rings: negative k");
  atoms.validate();
  bonds.validate();
  const ClassVocab base = chem_class_vocab(atoms, bonds);

  std::map<RingSignature, long long> counts;
  for (const auto& g : dataset) {
    if (!(g.vocab() == base))
      throw std::invalid_argument("mine_rings: graph vocab mismatch");
    for (const auto& cycle : sssr_cycles(g)) {
      RingSignature sig = cycle_signature(g, cycle);
      if (ring_eligible(sig, atoms, bonds)) ++counts[sig];
    }
  }

  std::vector<std::pair<long long, RingSignature>> ranked;
  for (const auto& [sig, cnt] : counts) ranked.emplace_back(cnt, sig);
  std::sort(ranked.begin(), ranked.end(),
            [](const auto& x, const auto& y) {
              if (x.first != y.first) return x.first > y.first;
              return x.second < y.second;
            });

  RingDictionary dict;
  dict.atoms = atoms;
  dict.bonds = bonds;
  const int take = std::min<int>(k, static_cast<int>(ranked.size()));
  for (int i = 0; i < take; ++i) dict.entries.push_back(ranked[i].second);
  dict.shortfall = k - take;
  dict.validate();
  return dict;
}

CompressedGraph compress(const Graph& g, const RingDictionary& dict) {
  dict.validate();
  g.validate();
  if (!(g.vocab() == dict.base_vocab()))
    throw std::invalid_argument("compress: graph vocab mismatch");

  const int n = g.size();
  const int ne = g.vocab().no_edge_index;
  const int a = static_cast<int>(dict.atoms.symbols.size());

  std::map<RingSignature, int> rank_of;
  for (std::size_t e = 0; e < dict.entries.size(); ++e)
    rank_of[dict.entries[e]] = static_cast<int>(e);

  struct Candidate {
    int rank;
    std::vector<int> path;
  };
  std::vector<Candidate> candidates;
  if (!dict.entries.empty()) {
    for (auto& cycle : simple_cycles_up_to(g, 8)) {
      auto it = rank_of.find(cycle_signature(g, cycle));
      if (it != rank_of.end())
        candidates.push_back({it->second, std::move(cycle)});
    }
  }
  std::sort(candidates.begin(), candidates.end(),
            [](const Candidate& x, const Candidate& y) {
              if (x.rank != y.rank) return x.rank < y.rank;
              return x.path < y.path;
            });

  struct Chosen {
    int entry;
    std::vector<int> path;
  };
  std::vector<Chosen> chosen;
  std::vector<char> used(n, 0);
  std::vector<int> super_of(n, -1);
  // Attachment edges claimed so far. Key endpoints: atom index, or -1-c for
  // the supernode of chosen ring c. Value: the original edge, so the same
  // physical bond reached from both of its rings is not a collision.
  std::map<std::pair<int, int>, std::pair<int, int>> claims;

  for (const auto& cand : candidates) {
    const auto& path = cand.path;
    const int s = static_cast<int>(path.size());
    bool overlap = false;
    for (int v : path)
      if (used[v]) overlap = true;
    if (overlap) continue;

    std::vector<char> in_ring(n, 0);
    for (int v : path) in_ring[v] = 1;

    // Chords would be silently dropped by replacement, so leave such a ring
    // uncompressed.
    bool bad = false;
    for (int i = 0; i < s && !bad; ++i)
      for (int j = i + 1; j < s && !bad; ++j) {
        bool consecutive = (j - i == 1) || (i == 0 && j == s - 1);
        if (!consecutive && g.edge_class(path[i], path[j]) != ne) bad = true;
      }
    if (bad) continue;

    std::vector<std::pair<int, int>> attachments;  // ring atom, outside atom
    std::set<int> outside_seen;
    for (int u : path) {
      for (int v = 0; v < n && !bad; ++v) {
        if (v == u || in_ring[v]) continue;
        int c = g.edge_class(u, v);
        if (c == ne) continue;
        if (dict.bonds.order[c] != 1) bad = true;
        if (outside_seen.count(v)) bad = true;  // would merge two bonds
        outside_seen.insert(v);
        attachments.emplace_back(u, v);
      }
      if (bad) break;
    }
    if (bad || attachments.size() > 2) continue;

    const int ci = static_cast<int>(chosen.size());
    bool collide = false;
    // Endpoints swallowed by this ring move onto its supernode.
    std::map<std::pair<int, int>, std::pair<int, int>> remapped;
    auto remap = [&](int e) { return (e >= 0 && in_ring[e]) ? -1 - ci : e; };
    for (const auto& [key, orig] : claims) {
      auto nk = ordered(remap(key.first), remap(key.second));
      auto [it, fresh] = remapped.emplace(nk, orig);
      if (!fresh && it->second != orig) collide = true;
    }
    for (const auto& [u, v] : attachments) {
      int ev = super_of[v] >= 0 ? -1 - super_of[v] : v;
      auto [it, fresh] =
          remapped.emplace(ordered(-1 - ci, ev), ordered(u, v));
      if (!fresh && it->second != ordered(u, v)) collide = true;
    }
    if (collide) continue;

    claims = std::move(remapped);
    for (int v : path) {
      used[v] = 1;
      super_of[v] = ci;
    }
    chosen.push_back({cand.rank, path});
  }

  std::vector<int> kept;
  for (int v = 0; v < n; ++v)
    if (!used[v]) kept.push_back(v);
  std::vector<int> kept_index(n, -1);
  for (std::size_t i = 0; i < kept.size(); ++i)
    kept_index[kept[i]] = static_cast<int>(i);
  const int kept_n = static_cast<int>(kept.size());
  const int out_n = kept_n + static_cast<int>(chosen.size());

  CompressedGraph out{Graph(out_n, dict.extended_vocab()), {}};
  for (int i = 0; i < kept_n; ++i)
    out.graph.set_node_class(i, g.node_class(kept[i]));
  for (int i = 0; i < kept_n; ++i)
    for (int j = i + 1; j < kept_n; ++j)
      out.graph.set_edge_class(i, j, g.edge_class(kept[i], kept[j]));
  for (std::size_t c = 0; c < chosen.size(); ++c) {
    const int node = kept_n + static_cast<int>(c);
    out.graph.set_node_class(node, a + chosen[c].entry);
    out.supernodes.push_back({node, chosen[c].entry});
  }
  auto resolve = [&](int e) {
    return e < 0 ? kept_n + (-1 - e) : kept_index[e];
  };
  for (const auto& [key, orig] : claims) {
    out.graph.set_edge_class(resolve(key.first), resolve(key.second),
                             g.edge_class(orig.first, orig.second));
  }
  out.graph.validate();
  return out;
}

Graph decompress(const Graph& g, const RingDictionary& dict,
                 int* ambiguity_warnings) {
  dict.validate();
  g.validate();
  if (!(g.vocab() == dict.extended_vocab()))
    throw std::invalid_argument("decompress: graph vocab mismatch");

  int warnings = 0;
  Graph cur = g;
  for (;;) {
    const int n = cur.size();
    int sn = -1;
    for (int i = 0; i < n && sn < 0; ++i)
      if (dict.entry_of_class(cur.node_class(i)) >= 0) sn = i;
    if (sn < 0) break;

    const int entry = dict.entry_of_class(cur.node_class(sn));
    const RingSignature& sig = dict.entries[entry];
    const int s = sig.size;
    const int ne = cur.vocab().no_edge_index;

    std::vector<std::pair<int, int>> attach;  // neighbor, edge class
    for (int v = 0; v < n; ++v) {
      if (v == sn) continue;
      int c = cur.edge_class(sn, v);
      if (c == ne) continue;
      if (dict.bonds.order[c] != 1)
        throw DecodeError("non-single bond on supernode");
      attach.emplace_back(v, c);
    }

    std::vector<int> spares = spare_positions(sig, dict.atoms, dict.bonds);
    if (attach.size() > spares.size())
      throw DecodeError("over-attached supernode");

    auto maps = ring_symmetries(sig);
    std::vector<int> chosen_pos;
    bool ambiguous = false;
    for (std::size_t kth = 0; kth < attach.size(); ++kth) {
      std::vector<int> cands;
      for (int p : spares)
        if (std::find(chosen_pos.begin(), chosen_pos.end(), p) ==
            chosen_pos.end())
          cands.push_back(p);
      if (!single_orbit(cands, maps, chosen_pos)) ambiguous = true;
      int pick = cands.front();
      if (kth > 0) {
        int best_d = -1;
        for (int p : cands) {
          int d = ring_distance(chosen_pos[0], p, s);
          if (d > best_d) {
            best_d = d;
            pick = p;
          }
        }
      }
      chosen_pos.push_back(pick);
    }
    if (ambiguous) ++warnings;

    Graph next(n - 1 + s, cur.vocab());
    auto remap = [&](int v) { return v < sn ? v : v - 1; };
    for (int v = 0; v < n; ++v)
      if (v != sn) next.set_node_class(remap(v), cur.node_class(v));
    for (int i = 0; i < n; ++i)
      for (int j = i + 1; j < n; ++j)
        if (i != sn && j != sn)
          next.set_edge_class(remap(i), remap(j), cur.edge_class(i, j));
    const int ring0 = n - 1;
    for (int p = 0; p < s; ++p) {
      next.set_node_class(ring0 + p, sig.atom_sequence[p]);
      next.set_edge_class(ring0 + p, ring0 + (p + 1) % s,
                          sig.bond_sequence[p]);
    }
    for (std::size_t kth = 0; kth < attach.size(); ++kth) {
      next.set_edge_class(remap(attach[kth].first), ring0 + chosen_pos[kth],
                          attach[kth].second);
    }
    cur = std::move(next);
  }

  Graph out(cur.size(), dict.base_vocab());
  for (int i = 0; i < cur.size(); ++i)
    out.set_node_class(i, cur.node_class(i));
  for (int i = 0; i < cur.size(); ++i)
    for (int j = i + 1; j < cur.size(); ++j)
      out.set_edge_class(i, j, cur.edge_class(i, j));
  out.validate();
  if (ambiguity_warnings) *ambiguity_warnings = warnings;
  return out;
}

Graph decompress(const CompressedGraph& cg, const RingDictionary& dict,
                 int* ambiguity_warnings) {
  for (const auto& rec : cg.supernodes) {
    if (rec.node < 0 || rec.node >= cg.graph.size() ||
        cg.graph.node_class(rec.node) != dict.supernode_class(rec.entry))
      throw std::invalid_argument("decompress: provenance mismatch");
  }
  return decompress(cg.graph, dict, ambiguity_warnings);
}

}  // namespace dmol
