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

#include "uss/streams.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <stdexcept>

#include "uss/rng.hpp"

namespace uss {
namespace {

std::uint64_t sum_counts(const std::vector<std::uint64_t>& counts) {
  std::uint64_t total = 0;
  for (std::uint64_t c : counts) {
    if (c > UINT64_MAX - total) throw std::overflow_error("stream total overflows");
    total += c;
  }
  return total;
}

/// Binary indexed tree over per-item remaining row counts. Supports prefix
/// search and decrement in O(log universe), which turns sampling without
/// replacement into a uniform random permutation of the expanded rows
/// without ever materializing them.
class RowPool {
 public:
  explicit RowPool(const std::vector<std::uint64_t>& counts)
      : n_(counts.size()), tree_(counts.size() + 1, 0) {
    for (std::size_t i = 0; i < n_; ++i) tree_[i + 1] = counts[i];
    for (std::size_t i = 1; i <= n_; ++i) {
      const std::size_t parent = i + (i & (0 - i));
      if (parent <= n_) tree_[parent] += tree_[i];
    }
    log2_ = 1;
    while ((std::size_t(1) << log2_) <= n_) ++log2_;
  }

  /// Index of the row owner at position `target` (0-based) within the
  /// remaining rows, in item order.
  std::size_t find(std::uint64_t target) const {
    std::size_t pos = 0;
    for (std::size_t step = std::size_t(1) << (log2_ - 1); step > 0; step >>= 1) {
      const std::size_t next = pos + step;
      if (next <= n_ && tree_[next] <= target) {
        target -= tree_[next];
        pos = next;
      }
    }
    return pos;  // 0-based item index
  }

  void remove_one(std::size_t index) {
    for (std::size_t i = index + 1; i <= n_; i += i & (0 - i)) --tree_[i];
  }

 private:
  std::size_t n_;
  std::vector<std::uint64_t> tree_;
  std::size_t log2_;
};

void emit_shuffled(const std::vector<std::uint64_t>& counts, ItemId id_base,
                   std::uint64_t seed, const std::function<void(ItemId)>& sink) {
  const std::uint64_t total = sum_counts(counts);
  if (total == 0) return;
  RowPool pool(counts);
  Rng rng(seed);
  for (std::uint64_t remaining = total; remaining > 0; --remaining) {
    const std::size_t index = pool.find(rng.next_below(remaining));
    pool.remove_one(index);
    sink(id_base + index + 1);
  }
}

/// (count, id) pairs for positive counts, sorted by the given comparator.
template <class Less>
std::vector<std::pair<std::uint64_t, ItemId>> positive_sorted(
    const std::vector<std::uint64_t>& counts, Less less) {
  std::vector<std::pair<std::uint64_t, ItemId>> items;
  for (std::size_t i = 0; i < counts.size(); ++i)
    if (counts[i] > 0) items.emplace_back(counts[i], ItemId(i + 1));
  std::sort(items.begin(), items.end(), less);
  return items;
}

void check_adversary(const StreamSpec& spec) {
  if (spec.adversary_capacity == 0) return;
  const std::uint64_t m = spec.adversary_capacity;
  for (std::uint64_t c : spec.base.counts) {
    // max n_i < 2 * total / m, kept in integer arithmetic
    if (c * m >= 2 * spec.base.total)
      throw std::invalid_argument(
          "adversarial ordering needs every count below 2*total/capacity");
  }
}

}  // namespace

GroundTruth explicit_counts(std::vector<std::uint64_t> counts) {
  GroundTruth truth;
  truth.total = sum_counts(counts);
  truth.counts = std::move(counts);
  return truth;
}

GroundTruth weibull_counts(double shape, double scale, std::size_t grid_size) {
  if (!(shape > 0.0) || !(scale > 0.0))
    throw std::invalid_argument("Weibull shape and scale must be positive");
  if (grid_size < 1) throw std::invalid_argument("grid size must be at least 1");
  std::vector<std::uint64_t> counts(grid_size);
  for (std::size_t i = 1; i <= grid_size; ++i) {
    const double u = (double(i) - 0.5) / double(grid_size);
    const double quantile = scale * std::pow(-std::log1p(-u), 1.0 / shape);
    counts[i - 1] = std::uint64_t(std::llround(quantile));
  }
  return explicit_counts(std::move(counts));
}

GroundTruth scale_to_total(const GroundTruth& truth, std::uint64_t target_total) {
  if (truth.total == 0) throw std::invalid_argument("cannot rescale an empty stream");
  const double factor = double(target_total) / double(truth.total);
  std::vector<std::uint64_t> counts(truth.counts.size());
  for (std::size_t i = 0; i < counts.size(); ++i)
    counts[i] = std::uint64_t(std::llround(double(truth.counts[i]) * factor));
  return explicit_counts(std::move(counts));
}

GroundTruth stream_truth(const StreamSpec& spec) {
  const GroundTruth& base = spec.base;
  switch (spec.ordering) {
    case Ordering::shuffled:
    case Ordering::sorted_ascending:
      return base;
    case Ordering::two_halves: {
      std::vector<std::uint64_t> counts = base.counts;
      counts.insert(counts.end(), base.counts.begin(), base.counts.end());
      return explicit_counts(std::move(counts));
    }
    case Ordering::adversarial_append: {
      std::vector<std::uint64_t> counts = base.counts;
      counts.insert(counts.end(), base.total, 1);
      return explicit_counts(std::move(counts));
    }
    case Ordering::all_unique:
      return explicit_counts(std::vector<std::uint64_t>(base.total, 1));
  }
  throw std::logic_error("unreachable ordering");
}

GroundTruth emit(const StreamSpec& spec, const std::function<void(ItemId)>& sink) {
  const GroundTruth& base = spec.base;
  switch (spec.ordering) {
    case Ordering::shuffled:
      emit_shuffled(base.counts, 0, spec.seed, sink);
      break;
    case Ordering::sorted_ascending:
      for (const auto& [count, id] : positive_sorted(base.counts, std::less<>()))
        for (std::uint64_t r = 0; r < count; ++r) sink(id);
      break;
    case Ordering::two_halves:
      emit_shuffled(base.counts, 0, derive_seed(spec.seed, 0), sink);
      emit_shuffled(base.counts, base.universe(), derive_seed(spec.seed, 1), sink);
      break;
    case Ordering::adversarial_append: {
      check_adversary(spec);
      const auto desc = positive_sorted(
          base.counts, [](const auto& a, const auto& b) {
            if (a.first != b.first) return a.first > b.first;
            return a.second < b.second;
          });
      for (const auto& [count, id] : desc)
        for (std::uint64_t r = 0; r < count; ++r) sink(id);
      for (std::uint64_t j = 1; j <= base.total; ++j)
        sink(base.universe() + j);
      break;
    }
    case Ordering::all_unique:
      for (std::uint64_t j = 1; j <= base.total; ++j) sink(j);
      break;
  }
  return stream_truth(spec);
}

std::vector<std::vector<ItemId>> epoch_items(const GroundTruth& truth,
                                             std::size_t k) {
  if (k < 1) throw std::invalid_argument("epoch count must be at least 1");
  std::vector<ItemId> by_rank(truth.universe());
  std::iota(by_rank.begin(), by_rank.end(), ItemId(1));
  std::sort(by_rank.begin(), by_rank.end(), [&truth](ItemId a, ItemId b) {
    const std::uint64_t ca = truth.count_of(a), cb = truth.count_of(b);
    if (ca != cb) return ca < cb;
    return a < b;
  });
  std::vector<std::vector<ItemId>> groups(k);
  const std::size_t v = by_rank.size();
  for (std::size_t g = 0; g < k; ++g) {
    const std::size_t lo = g * v / k, hi = (g + 1) * v / k;
    groups[g].assign(by_rank.begin() + lo, by_rank.begin() + hi);
  }
  return groups;
}

std::vector<SubsetQuery> epochs(const GroundTruth& truth, std::size_t k) {
  std::vector<SubsetQuery> queries;
  for (auto& group : epoch_items(truth, k))
    queries.push_back(SubsetQuery::of_items(std::move(group)));
  return queries;
}

}  // namespace uss
