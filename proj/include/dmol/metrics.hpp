// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <set>
#include <span>
#include <string>

#include "dmol/chem.hpp"
#include "dmol/graph.hpp"

namespace dmol {

// Validity / uniqueness / novelty over a generated batch. Uniqueness is the
// share of distinct canonical hashes among the valid molecules; novelty is
// the share of those distinct hashes unseen in training. Every fraction is
// reconstructible from the counts.
struct MetricReport {
  double validity = 0.0;
  double uniqueness = 0.0;
  double novelty = 0.0;
  double vu = 0.0;
  double vun = 0.0;
  int total = 0;
  int valid = 0;
  int distinct_valid = 0;
  int novel = 0;
  bool undefined = false;  // a denominator was zero; its ratio reports 0
};

MetricReport evaluate(std::span<const Graph> generated,
                      const std::set<std::string>& training_hashes,
                      const AtomVocab& atoms, const BondVocab& bonds);

}  // namespace dmol
