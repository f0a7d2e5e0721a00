// SPDX-License-Identifier: Apache-2.0

#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <set>
#include <string>
#include <vector>

#include "dmol/chem.hpp"
#include "dmol/metrics.hpp"
#include "dmol/rng.hpp"

using namespace dmol;

namespace {

Graph mol(const std::string& smiles) {
  return parse_smiles(smiles, AtomVocab{}, BondVocab{});
}

// Two disconnected atoms: valences fine, connectivity not.
Graph broken() {
  Graph g(2, chem_class_vocab(AtomVocab{}, BondVocab{}));
  g.set_node_class(0, 0);
  g.set_node_class(1, 1);
  return g;
}

}  // namespace

TEST_CASE("degenerate batches") {
  AtomVocab atoms;
  BondVocab bonds;

  std::vector<Graph> copies(5, mol("CCO"));
  std::set<std::string> training{canonical_hash(mol("CCO"))};
  MetricReport rep = evaluate(copies, training, atoms, bonds);
  CHECK(rep.total == 5);
  CHECK(rep.valid == 5);
  CHECK(rep.distinct_valid == 1);
  CHECK(rep.novel == 0);
  CHECK(rep.validity == 1.0);
  CHECK(rep.uniqueness == doctest::Approx(0.2).epsilon(1e-12));
  CHECK(rep.novelty == 0.0);
  CHECK(rep.vu == doctest::Approx(0.2).epsilon(1e-12));
  CHECK(rep.vun == 0.0);
  CHECK_FALSE(rep.undefined);

  std::vector<Graph> invalid(3, broken());
  MetricReport none = evaluate(invalid, training, atoms, bonds);
  CHECK(none.validity == 0.0);
  CHECK(none.uniqueness == 0.0);
  CHECK(none.novelty == 0.0);
  CHECK(none.vu == 0.0);
  CHECK(none.vun == 0.0);
  CHECK(none.valid == 0);
  CHECK(none.undefined);

  std::vector<Graph> empty;
  CHECK_THROWS_AS(evaluate(empty, training, atoms, bonds),
                  std::invalid_argument);
}

TEST_CASE("mixed hand-built batch") {
  AtomVocab atoms;
  BondVocab bonds;

  std::vector<Graph> batch;
  for (int i = 0; i < 3; ++i) batch.push_back(mol("CCO"));
  batch.push_back(mol("CCC"));
  batch.push_back(mol("CCN"));
  batch.push_back(mol("CCN"));
  for (int i = 0; i < 4; ++i) batch.push_back(broken());
  std::set<std::string> training{canonical_hash(mol("CCO"))};

  MetricReport rep = evaluate(batch, training, atoms, bonds);
  CHECK(rep.total == 10);
  CHECK(rep.valid == 6);
  CHECK(rep.distinct_valid == 3);
  CHECK(rep.novel == 2);
  CHECK(rep.validity == 6.0 / 10.0);
  CHECK(rep.uniqueness == 3.0 / 6.0);
  CHECK(rep.novelty == 2.0 / 3.0);
  CHECK(rep.vu == doctest::Approx(rep.validity * rep.uniqueness)
                      .epsilon(1e-12));
  CHECK(rep.vun == doctest::Approx(rep.vu * rep.novelty).epsilon(1e-12));
  CHECK_FALSE(rep.undefined);

  // Counts reconstruct every fraction exactly.
  CHECK(rep.validity == static_cast<double>(rep.valid) / rep.total);
  CHECK(rep.uniqueness ==
        static_cast<double>(rep.distinct_valid) / rep.valid);
  CHECK(rep.novelty == static_cast<double>(rep.novel) / rep.distinct_valid);
}

TEST_CASE("permutation invariance and duplicate monotonicity") {
  AtomVocab atoms;
  BondVocab bonds;
  RngStream rng(411);

  std::vector<Graph> batch{mol("CCO"),      mol("N#CC=O"), mol("CC(C)C"),
                           mol("C1=CC=CC=C1"), broken(),   mol("CCO")};
  std::set<std::string> training{canonical_hash(mol("N#CC=O"))};
  MetricReport before = evaluate(batch, training, atoms, bonds);

  std::vector<Graph> shuffled;
  for (const auto& g : batch) {
    Permutation p = Permutation::random(g.size(), rng);
    shuffled.push_back(apply_permutation(g, p));
  }
  MetricReport after = evaluate(shuffled, training, atoms, bonds);
  CHECK(after.validity == before.validity);
  CHECK(after.uniqueness == before.uniqueness);
  CHECK(after.novelty == before.novelty);
  CHECK(after.valid == before.valid);
  CHECK(after.distinct_valid == before.distinct_valid);
  CHECK(after.novel == before.novel);
  CHECK(after.undefined == before.undefined);

  std::vector<Graph> with_dup = batch;
  with_dup.push_back(mol("CC(C)C"));
  MetricReport dup = evaluate(with_dup, training, atoms, bonds);
  CHECK(dup.uniqueness <= before.uniqueness);
}
