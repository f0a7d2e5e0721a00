// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstdint>
#include <random>
#include <span>
#include <string_view>
#include <vector>

namespace dmol {

/// Inverse-CDF lookup: maps a uniform u in [0, 1) to a class index. probs
/// must be nonnegative with at least one positive entry; the final nonzero
/// entry absorbs rounding slack.
int categorical_from_unit(std::span<const double> probs, double u);

/// Seeded random stream with explicit sampling primitives.
///
/// std::*_distribution output is implementation-defined, so every draw made
/// by the library goes through the helpers here instead; results are
/// identical across platforms and standard libraries. Substreams derived via
/// derive() depend only on (seed, label, index), never on the parent's draw
/// position, which keeps each component reproducible in isolation.
class RngStream {
 public:
  explicit RngStream(std::uint64_t seed);

  /// Substream keyed by (seed, label, index). Does not consume draws.
  RngStream derive(std::string_view label, std::uint64_t index = 0) const;

  std::uint64_t next_u64();

  /// Uniform in [0, 1) with 53 random bits.
  double next_unit();

  /// Uniform integer in [0, bound); bound must be positive.
  std::uint64_t next_below(std::uint64_t bound);

  /// Index drawn from a categorical distribution. probs must be nonnegative
  /// and sum to ~1; the final nonzero entry absorbs rounding slack.
  int sample_categorical(std::span<const double> probs);

  /// `count` distinct values from [0, population), sorted ascending.
  std::vector<int> sample_without_replacement(int population, int count);

  /// Weighted without-replacement selection of `count` distinct indices,
  /// inclusion biased toward larger weights. Weights must be positive.
  std::vector<int> weighted_sample_without_replacement(
      std::span<const double> weights, int count);

  std::uint64_t seed() const { return seed_; }

 private:
  std::uint64_t seed_;
  std::mt19937_64 engine_;
};

}  // namespace dmol
