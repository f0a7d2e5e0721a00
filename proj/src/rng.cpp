// SPDX-License-Identifier: Apache-2.0

#include "dmol/rng.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <stdexcept>

namespace dmol {
namespace {

std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

std::uint64_t fnv1a(std::string_view s) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char c : s) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  return h;
}

}  // namespace

RngStream::RngStream(std::uint64_t seed)
    : seed_(seed), engine_(splitmix64(seed)) {}

RngStream RngStream::derive(std::string_view label, std::uint64_t index) const {
  std::uint64_t mixed = splitmix64(seed_ ^ fnv1a(label));
  return RngStream(splitmix64(mixed + 0x9e3779b97f4a7c15ULL * (index + 1)));
}

std::uint64_t RngStream::next_u64() { return engine_(); }

double RngStream::next_unit() {
  return static_cast<double>(next_u64() >> 11) * 0x1.0p-53;
}

std::uint64_t RngStream::next_below(std::uint64_t bound) {
  if (bound == 0) {
    throw std::invalid_argument("RngStream::next_below: bound must be positive");
  }
  // Values below the threshold are rejected so the remainder is unbiased.
  std::uint64_t threshold = (0 - bound) % bound;
  for (;;) {
    std::uint64_t r = next_u64();
    if (r >= threshold) return static_cast<std::uint64_t>(r % bound);
  }
}

int categorical_from_unit(std::span<const double> probs, double u) {
  if (probs.empty()) {
    throw std::invalid_argument("categorical_from_unit: empty distribution");
  }
  double acc = 0.0;
  int last_nonzero = -1;
  for (std::size_t i = 0; i < probs.size(); ++i) {
    if (probs[i] < 0.0) {
      throw std::invalid_argument(
          "categorical_from_unit: negative probability");
    }
    if (probs[i] > 0.0) last_nonzero = static_cast<int>(i);
    acc += probs[i];
    if (u < acc) return static_cast<int>(i);
  }
  if (last_nonzero < 0) {
    throw std::invalid_argument("categorical_from_unit: all-zero distribution");
  }
  return last_nonzero;  // absorbs rounding slack at the tail
}

int RngStream::sample_categorical(std::span<const double> probs) {
  return categorical_from_unit(probs, next_unit());
}

std::vector<int> RngStream::sample_without_replacement(int population,
                                                       int count) {
  if (count < 0 || count > population) {
    throw std::invalid_argument(
        "sample_without_replacement: count out of range");
  }
  std::vector<int> idx(population);
  std::iota(idx.begin(), idx.end(), 0);
  for (int i = 0; i < count; ++i) {
    int j = i + static_cast<int>(next_below(
                    static_cast<std::uint64_t>(population - i)));
    std::swap(idx[i], idx[j]);
  }
  idx.resize(count);
  std::sort(idx.begin(), idx.end());
  return idx;
}

std::vector<int> RngStream::weighted_sample_without_replacement(
    std::span<const double> weights, int count) {
  int population = static_cast<int>(weights.size());
  if (count < 0 || count > population) {
    throw std::invalid_argument(
        "weighted_sample_without_replacement: count out of range");
  }
  // Exponential-jump keys: picking the `count` largest log(u)/w keys draws
  // each subset with the intended weighted inclusion bias.
  std::vector<std::pair<double, int>> keyed(population);
  for (int i = 0; i < population; ++i) {
    if (!(weights[i] > 0.0)) {
      throw std::invalid_argument(
          "weighted_sample_without_replacement: weights must be positive");
    }
    double u = next_unit();
    // Guard against log(0).
    u = std::max(u, std::numeric_limits<double>::min());
    keyed[i] = {std::log(u) / weights[i], i};
  }
  std::sort(keyed.begin(), keyed.end(),
            [](const auto& a, const auto& b) {
              if (a.first != b.first) return a.first > b.first;
              return a.second < b.second;
            });
  std::vector<int> out(count);
  for (int i = 0; i < count; ++i) out[i] = keyed[i].second;
  std::sort(out.begin(), out.end());
  return out;
}

}  // namespace dmol
