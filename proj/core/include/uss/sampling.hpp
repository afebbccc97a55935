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
#include <cstdint>
#include <limits>
#include <map>
#include <unordered_map>
#include <utility>
#include <vector>

#include "uss/estimation.hpp"
#include "uss/rng.hpp"
#include "uss/sketch.hpp"

namespace uss {

/// Priority sample of weighted items: priorities R_i = U_i / n_i, the m
/// smallest are kept, tau is the (m+1)-th smallest priority (infinity when
/// every item fits). A kept item's adjusted value is max(n_i, 1/tau), which
/// makes full samples exact.
struct PrioritySample {
  struct Entry {
    ItemId item;
    double value;
    double priority;
    double adjusted;
  };
  std::vector<Entry> kept;
  double threshold = std::numeric_limits<double>::infinity();

  double subset_estimate(const SubsetQuery& query) const {
    double sum = 0.0;
    for (const Entry& e : kept)
      if (query.contains(e.item)) sum += e.adjusted;
    return sum;
  }

  double total_estimate() const {
    double sum = 0.0;
    for (const Entry& e : kept) sum += e.adjusted;
    return sum;
  }
};

PrioritySample priority_sample(const std::vector<std::pair<ItemId, double>>& items,
                               std::size_t m, std::uint64_t seed);

double priority_estimate(const PrioritySample& sample, const SubsetQuery& query);

/// Bottom-k uniform item sample: keeps the k distinct items with the
/// smallest seeded hashes. The kept set can only shrink an item's chances
/// over time (the threshold is non-increasing and hashes are fixed), so a
/// kept item has been kept since its first row and its count is exact.
class BottomK {
 public:
  BottomK(std::size_t k, std::uint64_t seed);

  void update(ItemId item);

  /// Distinct-count estimate (k-1)/h_(k), or the exact count when the
  /// sample never filled.
  double distinct_estimate() const;

  /// (D_hat / k) * sum of exact counts of kept items in the subset; exact
  /// when every distinct item fit in the sample.
  double subset_estimate(const SubsetQuery& query) const;

  std::size_t size() const { return entries_.size(); }
  std::size_t capacity() const { return k_; }

  /// Kept items with their exact counts, sorted by item id.
  std::vector<std::pair<ItemId, std::uint64_t>> kept() const {
    std::vector<std::pair<ItemId, std::uint64_t>> out;
    out.reserve(entries_.size());
    for (const Entry& e : entries_) out.emplace_back(e.item, e.count);
    std::sort(out.begin(), out.end());
    return out;
  }

 private:
  double hash_of(ItemId item) const;

  struct Entry {
    ItemId item;
    double hash;
    std::uint64_t count;
  };

  std::size_t k_;
  std::uint64_t seed_;
  std::unordered_map<ItemId, std::uint32_t> index_;
  std::vector<Entry> entries_;
  // hash -> entry slot, for evicting the largest kept hash in O(log k).
  std::map<double, std::uint32_t> by_hash_;
};

/// Adaptive sample-and-hold over a budget of m counters. The rate starts at
/// 1 and decays by factor 0.9 whenever the table overflows; surviving
/// counters are thinned per the rate ratio or decremented by a geometric
/// draw, and non-positive counters drop out.
class SampleAndHold {
 public:
  SampleAndHold(std::size_t capacity, std::uint64_t seed);

  void update(ItemId item);

  /// Held items estimate counter + (1 - p)/p; absent items 0.
  double estimate(ItemId item) const;

  double subset_estimate(const SubsetQuery& query) const;

  double rate() const { return rate_; }
  std::size_t size() const { return entries_.size(); }
  std::size_t capacity() const { return capacity_; }

 private:
  void thin();

  struct Entry {
    ItemId item;
    std::uint64_t counter;
  };

  std::size_t capacity_;
  double rate_ = 1.0;
  Rng rng_;
  std::unordered_map<ItemId, std::uint32_t> index_;
  std::vector<Entry> entries_;
};

}  // namespace uss
