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

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <stdexcept>
#include <type_traits>
#include <vector>

#include "uss/detail/count_groups.hpp"
#include "uss/detail/flat_map.hpp"
#include "uss/rng.hpp"

namespace uss {

/// Item identifiers are opaque 64-bit values. Callers with string keys intern
/// them (see harness.hpp).
using ItemId = std::uint64_t;

/// Deterministic: classic Space Saving, the arriving item always takes over
/// the minimum bin's label. Unbiased: the label is taken with probability
/// 1/(min_count+1), which makes every bin count an unbiased estimate of its
/// label's true count.
enum class UpdateMode { deterministic, unbiased };

/// Space Saving sketch over a fixed budget of m (item, count) bins.
///
/// Count is std::uint64_t for unit-weight streams (exact, O(1) updates via
/// the count-group index) or double for weighted streams and merge results.
/// The weighted update implements the one-level thresholded-PPS reduction
/// over the minimum-count bins plus the arriving item; a real-count sketch
/// routes unit updates through it with weight 1.
///
/// All randomness comes from a per-sketch seeded generator, so a (stream,
/// seed) pair fully determines the final state. Instances are single-writer;
/// concurrent updates to one sketch are not supported.
template <class Count>
class SpaceSaving {
  static_assert(std::is_same_v<Count, std::uint64_t> || std::is_same_v<Count, double>,
                "Count must be std::uint64_t or double");
  static constexpr bool integer_counts = std::is_same_v<Count, std::uint64_t>;
  static constexpr std::uint32_t npos = detail::ItemSlotMap::npos;

 public:
  struct Bin {
    ItemId item;
    Count count;
  };

  SpaceSaving(std::size_t capacity, UpdateMode mode, std::uint64_t seed)
      : capacity_(capacity), mode_(mode), seed_(seed), rng_(seed),
        map_(check_capacity(capacity)) {
    bins_.reserve(capacity_);
    if constexpr (integer_counts) groups_ = detail::CountGroups(capacity_);
  }

  /// Processes one unit-weight row.
  void update(ItemId item) {
    if constexpr (integer_counts) {
      ++rows_;
      const std::uint32_t b = map_.find(item);
      if (b != npos) {
        groups_.increment(b);
        ++bins_[b].count;
        return;
      }
      if (bins_.size() < capacity_) {
        add_bin(item, 1);
        return;
      }
      const auto& min_bins = groups_.min_bins();
      const std::uint64_t c = groups_.min_count();
      const std::uint32_t victim =
          min_bins[min_bins.size() == 1 ? 0 : rng_.next_below(min_bins.size())];
      const bool take_label = mode_ == UpdateMode::deterministic ||
                              rng_.chance(1.0 / double(c + 1));
      groups_.increment(victim);
      bins_[victim].count = c + 1;
      if (take_label) relabel(victim, item);
    } else {
      update_weighted(item, 1.0);
    }
  }

  /// Processes one weighted row. Only available on real-count sketches.
  void update_weighted(ItemId item, double weight)
    requires std::is_same_v<Count, double>
  {
    if (!(weight > 0.0) || !std::isfinite(weight))
      throw std::invalid_argument("update weight must be positive and finite");
    ++rows_;
    weight_ += weight;
    const std::uint32_t b = map_.find(item);
    if (b != npos) {
      bins_[b].count += weight;
      return;
    }
    if (bins_.size() < capacity_) {
      add_bin(item, weight);
      return;
    }
    reduce_against_min(item, weight);
  }

  /// Estimated count; 0 for items not in the sketch. Never mutates state.
  Count estimate(ItemId item) const {
    const std::uint32_t b = map_.find(item);
    return b == npos ? Count{0} : bins_[b].count;
  }

  bool contains(ItemId item) const { return map_.find(item) != npos; }

  /// Minimum bin count, or 0 while the sketch is below capacity.
  Count min_count() const {
    if (bins_.size() < capacity_) return Count{0};
    if constexpr (integer_counts) {
      return groups_.min_count();
    } else {
      double mn = bins_[0].count;
      for (const Bin& bin : bins_) mn = std::min(mn, bin.count);
      return mn;
    }
  }

  /// Bins with count >= phi * total weight, largest first. phi in (0, 1].
  std::vector<Bin> frequent_items(double phi) const {
    if (!(phi > 0.0) || phi > 1.0)
      throw std::invalid_argument("frequent item threshold must be in (0, 1]");
    const double threshold = phi * total_weight();
    std::vector<Bin> out;
    for (const Bin& bin : bins_)
      if (double(bin.count) >= threshold) out.push_back(bin);
    sort_bins(out);
    return out;
  }

  /// Snapshot of all bins, sorted by count descending then item ascending.
  std::vector<Bin> bins() const {
    std::vector<Bin> out = bins_;
    sort_bins(out);
    return out;
  }

  /// Internal bin storage in unspecified order; valid until the next update.
  const std::vector<Bin>& unordered_bins() const { return bins_; }

  /// Bins in the order that fully determines future behavior: ascending
  /// count groups in their tie-break order for integer counts, storage
  /// order for real counts. restore() rebuilds the identical internal
  /// arrangement from a list in this order, so a sketch restored from it
  /// resumes the exact trajectory of the original, random choices included.
  std::vector<Bin> bins_in_state_order() const {
    if constexpr (integer_counts) {
      std::vector<Bin> out;
      out.reserve(bins_.size());
      for (std::uint32_t slot : groups_.traversal()) out.push_back(bins_[slot]);
      return out;
    } else {
      return bins_;
    }
  }

  std::size_t size() const { return bins_.size(); }
  std::size_t capacity() const { return capacity_; }
  UpdateMode mode() const { return mode_; }
  std::uint64_t seed() const { return seed_; }
  std::uint64_t rows_processed() const { return rows_; }

  /// Total processed mass: row count for unit-weight sketches, accumulated
  /// weight otherwise. For update-built sketches this equals the sum of bin
  /// counts; restored merge results keep the combined input mass instead.
  double total_weight() const {
    if constexpr (integer_counts) {
      return double(rows_);
    } else {
      return weight_;
    }
  }

  std::array<std::uint64_t, 4> rng_state() const { return rng_.state(); }

  /// Rebuilds a sketch from serialized state. The bin list may be in any
  /// order; counts must be positive. The relative order of equal counts is
  /// preserved into the tie-break structure, so a list produced by
  /// bins_in_state_order() yields a sketch that continues bit for bit like
  /// the one it was taken from.
  static SpaceSaving restore(std::size_t capacity, UpdateMode mode,
                             std::uint64_t seed, std::uint64_t rows,
                             double weight,
                             const std::array<std::uint64_t, 4>& rng_state,
                             const std::vector<Bin>& bins) {
    SpaceSaving s(capacity, mode, seed);
    if (bins.size() > capacity)
      throw std::invalid_argument("more bins than capacity");
    s.rows_ = rows;
    s.weight_ = weight;
    s.rng_.restore(rng_state);
    for (const Bin& bin : bins) {
      if (!(bin.count > Count{0}))
        throw std::invalid_argument("bin counts must be positive");
      if (s.map_.find(bin.item) != npos)
        throw std::invalid_argument("duplicate bin label");
      s.map_.insert(bin.item, static_cast<std::uint32_t>(s.bins_.size()));
      s.bins_.push_back(bin);
    }
    if constexpr (integer_counts) {
      std::vector<std::pair<std::uint32_t, std::uint64_t>> sorted;
      sorted.reserve(s.bins_.size());
      for (std::uint32_t i = 0; i < s.bins_.size(); ++i)
        sorted.emplace_back(i, s.bins_[i].count);
      std::stable_sort(sorted.begin(), sorted.end(),
                       [](const auto& a, const auto& b) { return a.second < b.second; });
      s.groups_.build_sorted(sorted);
    }
    return s;
  }

  bool validate_structure() const {
    if constexpr (integer_counts) {
      if (!groups_.validate(bins_.size())) return false;
      for (std::uint32_t i = 0; i < bins_.size(); ++i)
        if (groups_.count_of(i) != bins_[i].count) return false;
    }
    for (std::uint32_t i = 0; i < bins_.size(); ++i)
      if (map_.find(bins_[i].item) != i) return false;
    return map_.size() == bins_.size();
  }

 private:
  struct NoGroups {};

  static std::size_t check_capacity(std::size_t capacity) {
    if (capacity == 0)
      throw std::invalid_argument("sketch capacity must be at least 1");
    if (capacity >= detail::ItemSlotMap::npos)
      throw std::invalid_argument("sketch capacity too large");
    return capacity;
  }

  void add_bin(ItemId item, Count count) {
    const std::uint32_t b = static_cast<std::uint32_t>(bins_.size());
    bins_.push_back(Bin{item, count});
    map_.insert(item, b);
    if constexpr (integer_counts) groups_.add_unit_bin(b);
  }

  void relabel(std::uint32_t b, ItemId item) {
    map_.erase(bins_[b].item);
    bins_[b].item = item;
    map_.insert(item, b);
  }

  /// Thresholded-PPS reduction: candidates are the minimum-count bins J
  /// (count N) plus the arriving item (weight w), target size |J|. With
  /// alpha = |J| / (w + |J|*N), inclusion probabilities are min(1, alpha*w)
  /// for the item and alpha*N for each bin; exactly one candidate is dropped
  /// and every unsaturated survivor carries the Horvitz-Thompson count
  /// 1/alpha, so total mass is preserved exactly.
  void reduce_against_min(ItemId item, double w)
    requires std::is_same_v<Count, double>
  {
    double mn = bins_[0].count;
    for (const Bin& bin : bins_) mn = std::min(mn, bin.count);
    min_scratch_.clear();
    for (std::uint32_t i = 0; i < bins_.size(); ++i)
      if (bins_[i].count == mn) min_scratch_.push_back(i);
    const std::size_t k = min_scratch_.size();
    const double alpha = double(k) / (w + double(k) * mn);
    const double pi_new = alpha * w;
    if (pi_new < 1.0) {
      const double shared = 1.0 / alpha;
      const bool keep_new = rng_.chance(pi_new);
      for (std::uint32_t i : min_scratch_) bins_[i].count = shared;
      if (keep_new) {
        const std::uint32_t slot =
            min_scratch_[k == 1 ? 0 : rng_.next_below(k)];
        relabel(slot, item);
      }
    } else {
      // The item is kept surely with its exact weight; |J| >= 2 here and the
      // remaining |J|-1 slots go to the bins, inflated to |J|*N/(|J|-1).
      const double inflated = double(k) * mn / double(k - 1);
      const std::uint32_t slot = min_scratch_[rng_.next_below(k)];
      for (std::uint32_t i : min_scratch_) bins_[i].count = inflated;
      bins_[slot].count = w;
      relabel(slot, item);
    }
  }

  void sort_bins(std::vector<Bin>& v) const {
    std::sort(v.begin(), v.end(), [](const Bin& a, const Bin& b) {
      if (a.count != b.count) return a.count > b.count;
      return a.item < b.item;
    });
  }

  std::size_t capacity_;
  UpdateMode mode_;
  std::uint64_t seed_;
  Rng rng_;
  detail::ItemSlotMap map_;
  std::vector<Bin> bins_;
  [[no_unique_address]] std::conditional_t<integer_counts, detail::CountGroups, NoGroups>
      groups_;
  std::uint64_t rows_ = 0;
  double weight_ = 0.0;
  std::vector<std::uint32_t> min_scratch_;
};

/// Unit-weight sketch with exact integer counts.
using Sketch = SpaceSaving<std::uint64_t>;
/// Real-count sketch for weighted streams and merge results.
using WeightedSketch = SpaceSaving<double>;

}  // namespace uss
