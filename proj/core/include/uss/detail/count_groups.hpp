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
#include <utility>
#include <vector>

namespace uss::detail {

/// Stream-summary index for integer counts: bins partitioned into groups of
/// equal count, groups kept in a doubly linked list sorted ascending. The
/// head group is the minimum, group membership is a vector so a uniformly
/// random minimum bin is one draw away, and a unit increment is O(1) because
/// the target count c+1 is either the adjacent group or a fresh group
/// inserted right after. Links are pool indices, not pointers, so the
/// structure is trivially copyable.
class CountGroups {
 public:
  static constexpr std::uint32_t npos = 0xffffffffu;

  CountGroups() = default;

  explicit CountGroups(std::size_t capacity)
      : group_of_(capacity, npos), pos_of_(capacity, 0) {
    pool_.reserve(capacity + 2);
  }

  /// Registers a new bin with count 1. Valid while filling: all existing
  /// counts are >= 1, so the bin belongs at the head.
  void add_unit_bin(std::uint32_t bin) {
    if (head_ != npos && pool_[head_].count == 1) {
      push_member(head_, bin);
      return;
    }
    std::uint32_t g = alloc_group(1, npos, head_);
    if (head_ != npos) pool_[head_].prev = g;
    head_ = g;
    push_member(g, bin);
  }

  /// Moves a bin from count c to c+1.
  void increment(std::uint32_t bin) {
    const std::uint32_t g = group_of_[bin];
    const std::uint64_t c = pool_[g].count;
    const std::uint32_t nx = pool_[g].next;
    std::uint32_t target;
    if (nx != npos && pool_[nx].count == c + 1) {
      target = nx;
    } else {
      target = alloc_group(c + 1, g, nx);
      pool_[g].next = target;
      if (nx != npos) pool_[nx].prev = target;
    }
    remove_member(bin);
    if (pool_[g].members.empty()) release_group(g);
    push_member(target, bin);
  }

  std::uint64_t count_of(std::uint32_t bin) const {
    return pool_[group_of_[bin]].count;
  }

  std::uint64_t min_count() const { return pool_[head_].count; }

  const std::vector<std::uint32_t>& min_bins() const {
    return pool_[head_].members;
  }

  /// Rebuilds the index from (bin, count) pairs sorted ascending by count.
  void build_sorted(const std::vector<std::pair<std::uint32_t, std::uint64_t>>& sorted) {
    std::uint32_t g = npos;
    for (const auto& [bin, count] : sorted) {
      if (g == npos || pool_[g].count != count) {
        std::uint32_t ng = alloc_group(count, g, npos);
        if (g != npos) pool_[g].next = ng;
        if (head_ == npos) head_ = ng;
        g = ng;
      }
      push_member(g, bin);
    }
  }

  /// All bins in index order: groups ascending by count, members in their
  /// current tie-break order. Feeding this order back into build_sorted
  /// reproduces the structure exactly, which serialization relies on.
  std::vector<std::uint32_t> traversal() const {
    std::vector<std::uint32_t> out;
    for (std::uint32_t g = head_; g != npos; g = pool_[g].next)
      out.insert(out.end(), pool_[g].members.begin(), pool_[g].members.end());
    return out;
  }

  /// Structural self-check used by tests.
  bool validate(std::size_t bin_count) const {
    std::size_t seen = 0;
    std::uint64_t prev_count = 0;
    std::uint32_t g = head_;
    if (g != npos && pool_[g].prev != npos) return false;
    while (g != npos) {
      const auto& grp = pool_[g];
      if (grp.members.empty()) return false;
      if (prev_count > 0 && grp.count <= prev_count) return false;
      prev_count = grp.count;
      for (std::size_t i = 0; i < grp.members.size(); ++i) {
        std::uint32_t b = grp.members[i];
        if (group_of_[b] != g || pos_of_[b] != i) return false;
        ++seen;
      }
      if (grp.next != npos && pool_[grp.next].prev != g) return false;
      g = grp.next;
    }
    return seen == bin_count;
  }

 private:
  struct Group {
    std::uint64_t count = 0;
    std::uint32_t prev = npos;
    std::uint32_t next = npos;
    std::vector<std::uint32_t> members;
  };

  std::uint32_t alloc_group(std::uint64_t count, std::uint32_t prev,
                            std::uint32_t next) {
    std::uint32_t g;
    if (!free_.empty()) {
      g = free_.back();
      free_.pop_back();
    } else {
      g = static_cast<std::uint32_t>(pool_.size());
      pool_.emplace_back();
    }
    pool_[g].count = count;
    pool_[g].prev = prev;
    pool_[g].next = next;
    return g;
  }

  void release_group(std::uint32_t g) {
    const std::uint32_t p = pool_[g].prev;
    const std::uint32_t n = pool_[g].next;
    if (p != npos) pool_[p].next = n;
    if (n != npos) pool_[n].prev = p;
    if (head_ == g) head_ = n;
    free_.push_back(g);
  }

  void push_member(std::uint32_t g, std::uint32_t bin) {
    auto& v = pool_[g].members;
    group_of_[bin] = g;
    pos_of_[bin] = static_cast<std::uint32_t>(v.size());
    v.push_back(bin);
  }

  void remove_member(std::uint32_t bin) {
    auto& v = pool_[group_of_[bin]].members;
    const std::uint32_t i = pos_of_[bin];
    const std::uint32_t last = v.back();
    v[i] = last;
    pos_of_[last] = i;
    v.pop_back();
  }

  std::vector<Group> pool_;
  std::vector<std::uint32_t> free_;
  std::vector<std::uint32_t> group_of_;
  std::vector<std::uint32_t> pos_of_;
  std::uint32_t head_ = npos;
};

}  // namespace uss::detail
