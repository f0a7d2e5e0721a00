// SPDX-License-Identifier: Apache-2.0

#include "dmol/metrics.hpp"

#include <stdexcept>
#include <vector>

#include "dmol/parallel.hpp"

namespace dmol {

MetricReport evaluate(std::span<const Graph> generated,
                      const std::set<std::string>& training_hashes,
                      const AtomVocab& atoms, const BondVocab& bonds) {
  if (generated.empty())
    throw std::invalid_argument("evaluate: empty generated set");

  const int total = static_cast<int>(generated.size());
  std::vector<char> is_valid(total, 0);
  std::vector<std::string> hashes(total);
  parallel_for(total, [&](int i) {
    is_valid[i] = check_validity(generated[i], atoms, bonds).valid ? 1 : 0;
    if (is_valid[i]) hashes[i] = canonical_hash(generated[i]);
  });

  MetricReport rep;
  rep.total = total;
  std::set<std::string> distinct;
  for (int i = 0; i < total; ++i) {
    if (!is_valid[i]) continue;
    ++rep.valid;
    distinct.insert(hashes[i]);
  }
  rep.distinct_valid = static_cast<int>(distinct.size());
  for (const auto& h : distinct)
    if (!training_hashes.count(h)) ++rep.novel;

  rep.validity = static_cast<double>(rep.valid) / rep.total;
  if (rep.valid > 0) {
    rep.uniqueness = static_cast<double>(rep.distinct_valid) / rep.valid;
  } else {
    rep.undefined = true;
  }
  if (rep.distinct_valid > 0) {
    rep.novelty = static_cast<double>(rep.novel) / rep.distinct_valid;
  } else {
    rep.undefined = true;
  }
  rep.vu = rep.validity * rep.uniqueness;
  rep.vun = rep.vu * rep.novelty;
  return rep;
}

}  // namespace dmol
