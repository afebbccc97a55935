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
#include <vector>

namespace uss::detail {

/// Open-addressing map from 64-bit item id to a 32-bit bin slot, sized once
/// at construction for a fixed maximum occupancy. Linear probing with
/// backward-shift deletion, load factor kept at or below 1/4 so the probe
/// sequences on the update hot path stay short.
class ItemSlotMap {
 public:
  static constexpr std::uint32_t npos = 0xffffffffu;

  ItemSlotMap() = default;

  explicit ItemSlotMap(std::size_t max_entries) {
    std::size_t want = max_entries * 4 + 8;
    cap_ = 16;
    while (cap_ < want) cap_ <<= 1;
    mask_ = cap_ - 1;
    keys_.assign(cap_, 0);
    vals_.assign(cap_, npos);
  }

  std::uint32_t find(std::uint64_t key) const {
    std::size_t i = probe_start(key);
    while (vals_[i] != npos) {
      if (keys_[i] == key) return vals_[i];
      i = (i + 1) & mask_;
    }
    return npos;
  }

  void insert(std::uint64_t key, std::uint32_t val) {
    std::size_t i = probe_start(key);
    while (vals_[i] != npos) i = (i + 1) & mask_;
    keys_[i] = key;
    vals_[i] = val;
    ++size_;
  }

  void erase(std::uint64_t key) {
    std::size_t i = probe_start(key);
    while (vals_[i] != npos && keys_[i] != key) i = (i + 1) & mask_;
    if (vals_[i] == npos) return;
    // Backward-shift deletion keeps probe chains intact without tombstones.
    std::size_t hole = i;
    std::size_t j = (i + 1) & mask_;
    while (vals_[j] != npos) {
      std::size_t home = probe_start(keys_[j]);
      // Does slot j's entry belong at or before the hole (cyclically)?
      bool movable = (j > hole) ? (home <= hole || home > j)
                                : (home <= hole && home > j);
      if (movable) {
        keys_[hole] = keys_[j];
        vals_[hole] = vals_[j];
        hole = j;
      }
      j = (j + 1) & mask_;
    }
    vals_[hole] = npos;
    --size_;
  }

  std::size_t size() const { return size_; }

 private:
  std::size_t probe_start(std::uint64_t key) const {
    // Fibonacci hash; item ids may be small consecutive integers.
    return static_cast<std::size_t>((key * 0x9e3779b97f4a7c15ULL) >> 32) & mask_;
  }

  std::vector<std::uint64_t> keys_;
  std::vector<std::uint32_t> vals_;
  std::size_t cap_ = 0;
  std::size_t mask_ = 0;
  std::size_t size_ = 0;
};

}  // namespace uss::detail
