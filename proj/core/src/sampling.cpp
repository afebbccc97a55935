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

#include "uss/sampling.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace uss {

PrioritySample priority_sample(const std::vector<std::pair<ItemId, double>>& items,
                               std::size_t m, std::uint64_t seed) {
  if (m == 0) throw std::invalid_argument("priority sample size must be at least 1");
  Rng rng(seed);
  std::vector<PrioritySample::Entry> all;
  all.reserve(items.size());
  for (const auto& [item, value] : items) {
    if (!(value > 0.0) || !std::isfinite(value))
      throw std::invalid_argument("priority sample values must be positive and finite");
    const double priority = rng.next_double() / value;
    all.push_back({item, value, priority, value});
  }

  PrioritySample out;
  if (all.size() <= m) {
    // Full sample: tau stays infinite and adjusted values are exact.
    out.kept = std::move(all);
    return out;
  }

  std::nth_element(all.begin(), all.begin() + m, all.end(),
                   [](const auto& a, const auto& b) { return a.priority < b.priority; });
  out.threshold = all[m].priority;
  const double floor_value = 1.0 / out.threshold;
  out.kept.assign(all.begin(), all.begin() + m);
  for (auto& e : out.kept) e.adjusted = std::max(e.value, floor_value);
  return out;
}

double priority_estimate(const PrioritySample& sample, const SubsetQuery& query) {
  return sample.subset_estimate(query);
}

BottomK::BottomK(std::size_t k, std::uint64_t seed) : k_(k), seed_(seed) {
  if (k == 0) throw std::invalid_argument("bottom-k sample size must be at least 1");
  entries_.reserve(k);
}

double BottomK::hash_of(ItemId item) const {
  std::uint64_t s = seed_ ^ (item * 0x9e3779b97f4a7c15ULL);
  const std::uint64_t h = splitmix64(s);
  // (0, 1]: zero would break the (k-1)/h_(k) estimator.
  return double((h >> 11) + 1) * 0x1.0p-53;
}

void BottomK::update(ItemId item) {
  auto it = index_.find(item);
  if (it != index_.end()) {
    ++entries_[it->second].count;
    return;
  }
  const double h = hash_of(item);
  if (entries_.size() < k_) {
    const auto slot = static_cast<std::uint32_t>(entries_.size());
    entries_.push_back({item, h, 1});
    index_.emplace(item, slot);
    by_hash_.emplace(h, slot);
    return;
  }
  auto largest = std::prev(by_hash_.end());
  if (h >= largest->first) return;
  // Evict the largest kept hash; the arriving item must be on its first row
  // (a previously rejected item can never pass the shrinking threshold).
  const std::uint32_t slot = largest->second;
  index_.erase(entries_[slot].item);
  by_hash_.erase(largest);
  entries_[slot] = {item, h, 1};
  index_.emplace(item, slot);
  by_hash_.emplace(h, slot);
}

double BottomK::distinct_estimate() const {
  if (entries_.size() < k_) return double(entries_.size());
  const double h_k = by_hash_.rbegin()->first;
  return double(k_ - 1) / h_k;
}

double BottomK::subset_estimate(const SubsetQuery& query) const {
  double sum = 0.0;
  for (const Entry& e : entries_)
    if (query.contains(e.item)) sum += double(e.count);
  if (entries_.size() < k_) return sum;
  return distinct_estimate() / double(k_) * sum;
}

SampleAndHold::SampleAndHold(std::size_t capacity, std::uint64_t seed)
    : capacity_(capacity), rng_(seed) {
  if (capacity == 0)
    throw std::invalid_argument("sample-and-hold capacity must be at least 1");
  entries_.reserve(capacity + 1);
}

void SampleAndHold::update(ItemId item) {
  auto it = index_.find(item);
  if (it != index_.end()) {
    ++entries_[it->second].counter;
    return;
  }
  if (!rng_.chance(rate_)) return;
  const auto slot = static_cast<std::uint32_t>(entries_.size());
  entries_.push_back({item, 1});
  index_.emplace(item, slot);
  while (entries_.size() > capacity_) thin();
}

void SampleAndHold::thin() {
  const double next_rate = 0.9 * rate_;
  const double keep_ratio = next_rate / rate_;
  std::size_t i = 0;
  while (i < entries_.size()) {
    if (rng_.chance(keep_ratio)) {
      ++i;
      continue;
    }
    const std::uint64_t dec = rng_.geometric(next_rate);
    if (dec >= entries_[i].counter) {
      index_.erase(entries_[i].item);
      entries_[i] = entries_.back();
      entries_.pop_back();
      if (i < entries_.size()) index_[entries_[i].item] = static_cast<std::uint32_t>(i);
    } else {
      entries_[i].counter -= dec;
      ++i;
    }
  }
  rate_ = next_rate;
}

double SampleAndHold::estimate(ItemId item) const {
  auto it = index_.find(item);
  if (it == index_.end()) return 0.0;
  return double(entries_[it->second].counter) + (1.0 - rate_) / rate_;
}

double SampleAndHold::subset_estimate(const SubsetQuery& query) const {
  const double add_back = (1.0 - rate_) / rate_;
  double sum = 0.0;
  for (const Entry& e : entries_)
    if (query.contains(e.item)) sum += double(e.counter) + add_back;
  return sum;
}

}  // namespace uss
