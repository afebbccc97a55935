//  Licensed under the Apache License, Version 2.0 (the "License");
//  you may not use this file except in compliance with the License.
//  You may obtain a copy of the License at
//
//      http://www.apache.org/licenses/LICENSE-2.0
//
//  Unless required by applicable law or agreed to in writing, software
//  distributed under the License is distributed on an "AS IS" BASIS,
//  WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
//  See the License for the specific language governing permissions and
//  limitations under the License.

#pragma once

#include <cstdint>
#include <functional>
#include <vector>

#include "uss/estimation.hpp"
#include "uss/sketch.hpp"

namespace uss {

/// Per-item true counts for a synthetic stream. Item ids are contiguous from
/// 1, so id i maps to counts[i-1]; zero counts are legal universe members
/// that never emit a row.
struct GroundTruth {
  std::vector<std::uint64_t> counts;
  std::uint64_t total = 0;

  std::size_t universe() const { return counts.size(); }

  std::uint64_t count_of(ItemId id) const {
    return (id >= 1 && id <= counts.size()) ? counts[id - 1] : 0;
  }

  std::size_t distinct_positive() const {
    std::size_t n = 0;
    for (std::uint64_t c : counts) n += c > 0;
    return n;
  }
};

GroundTruth explicit_counts(std::vector<std::uint64_t> counts);

/// Discretized Weibull counts via the inverse CDF on the regular grid
/// u_i = (i - 0.5) / grid_size: n_i = round(scale * (-ln(1 - u_i))^(1/shape)).
/// Deterministic; heavy right tails come from shape < 1.
GroundTruth weibull_counts(double shape, double scale, std::size_t grid_size = 1000);

/// Rescales every count by target_total / total (rounded to nearest). The
/// result total is close to, but not exactly, target_total. Handy for sizing
/// a fixture's row volume without changing its shape.
GroundTruth scale_to_total(const GroundTruth& truth, std::uint64_t target_total);

enum class Ordering {
  /// Uniformly random permutation of the expanded rows (seeded).
  shuffled,
  /// Items in ascending count order, each item's rows contiguous.
  sorted_ascending,
  /// The count set duplicated over two disjoint id ranges: ids 1..v then
  /// v+1..2v, each half independently shuffled. First-half items never
  /// appear again after the midpoint.
  two_halves,
  /// Original items most-frequent first, then total more rows of fresh
  /// distinct items. Designed to force a deterministic sketch to forget
  /// every original item.
  adversarial_append,
  /// total rows, every one a fresh item.
  all_unique,
};

struct StreamSpec {
  GroundTruth base;
  Ordering ordering = Ordering::shuffled;
  std::uint64_t seed = 0;
  /// Target sketch capacity for the adversarial precondition
  /// max n_i < 2 * total / m. Zero skips the check.
  std::size_t adversary_capacity = 0;
};

/// Ground truth of the emitted rows, which differs from spec.base for the
/// orderings that extend the universe (two_halves, adversarial_append,
/// all_unique).
GroundTruth stream_truth(const StreamSpec& spec);

/// Streams the rows of `spec` into `sink` and returns stream_truth(spec).
/// Memory is O(universe), never O(rows); the same spec and seed always
/// produce the identical sequence.
GroundTruth emit(const StreamSpec& spec, const std::function<void(ItemId)>& sink);

/// Item groups of equal (within one) size by ascending count, ties broken by
/// id. Group k-1 holds the most frequent items.
std::vector<std::vector<ItemId>> epoch_items(const GroundTruth& truth, std::size_t k);

/// epoch_items wrapped as subset queries.
std::vector<SubsetQuery> epochs(const GroundTruth& truth, std::size_t k = 10);

}  // namespace uss
