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

#include "uss/sketch.hpp"

namespace uss {

enum class MergeKind { unbiased, misra_gries };

struct MergeResult {
  MergeKind kind;
  WeightedSketch sketch;
};

/// What a merge needs to know about an input sketch, independent of its
/// count representation.
struct SketchSnapshot {
  std::uint64_t rows = 0;
  double weight = 0.0;
  double min_count = 0.0;
  std::vector<std::pair<ItemId, double>> entries;
};

template <class Count>
SketchSnapshot snapshot(const SpaceSaving<Count>& sketch) {
  SketchSnapshot s;
  s.rows = sketch.rows_processed();
  s.weight = sketch.total_weight();
  s.min_count = double(sketch.min_count());
  s.entries.reserve(sketch.size());
  for (const auto& bin : sketch.bins())
    s.entries.emplace_back(bin.item, double(bin.count));
  return s;
}

/// Combines two sketches into one of capacity m.
///
/// Unbiased kind: counts of shared labels are summed, then the combined
/// entries are priority-sampled down to m bins with adjusted counts
/// max(count, 1/tau); expected post-merge estimates equal the summed inputs.
///
/// Misra-Gries kind: each input is first soft-thresholded by its own minimum
/// count (its Misra-Gries view, which never exceeds true counts), combined
/// sums are then soft-thresholded by the (m+1)-th largest combined count.
/// The result underestimates item-wise and has at most m nonzero bins.
MergeResult merge(const SketchSnapshot& a, const SketchSnapshot& b,
                  std::size_t m, MergeKind kind, std::uint64_t seed);

template <class CountA, class CountB>
MergeResult merge_unbiased(const SpaceSaving<CountA>& a, const SpaceSaving<CountB>& b,
                           std::size_t m, std::uint64_t seed) {
  return merge(snapshot(a), snapshot(b), m, MergeKind::unbiased, seed);
}

template <class CountA, class CountB>
MergeResult merge_misra_gries(const SpaceSaving<CountA>& a,
                              const SpaceSaving<CountB>& b, std::size_t m,
                              std::uint64_t seed) {
  return merge(snapshot(a), snapshot(b), m, MergeKind::misra_gries, seed);
}

}  // namespace uss
