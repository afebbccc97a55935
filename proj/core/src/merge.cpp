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

#include "uss/merge.hpp"

#include <algorithm>
#include <map>
#include <stdexcept>

#include "uss/rng.hpp"
#include "uss/sampling.hpp"

namespace uss {
namespace {

using CombinedMap = std::map<ItemId, double>;

void accumulate_raw(CombinedMap& into, const SketchSnapshot& s) {
  for (const auto& [item, count] : s.entries) into[item] += count;
}

/// Adds the snapshot's Misra-Gries view: counts soft-thresholded by the
/// sketch minimum, which never exceed the true counts of the input stream.
void accumulate_misra_gries(CombinedMap& into, const SketchSnapshot& s) {
  for (const auto& [item, count] : s.entries) {
    const double kept = count - s.min_count;
    if (kept > 0.0) into[item] += kept;
  }
}

WeightedSketch build_result(UpdateMode mode, std::size_t m, std::uint64_t seed,
                            const SketchSnapshot& a, const SketchSnapshot& b,
                            const std::vector<WeightedSketch::Bin>& bins) {
  Rng state_source(seed);
  return WeightedSketch::restore(m, mode, seed, a.rows + b.rows,
                                 a.weight + b.weight, state_source.state(), bins);
}

MergeResult merge_unbiased_impl(const SketchSnapshot& a, const SketchSnapshot& b,
                                std::size_t m, std::uint64_t seed) {
  CombinedMap combined;
  accumulate_raw(combined, a);
  accumulate_raw(combined, b);
  std::vector<WeightedSketch::Bin> bins;
  if (combined.size() <= m) {
    bins.reserve(combined.size());
    for (const auto& [item, count] : combined)
      bins.push_back(WeightedSketch::Bin{item, count});
  } else {
    std::vector<std::pair<ItemId, double>> entries(combined.begin(), combined.end());
    const PrioritySample sample =
        priority_sample(entries, m, derive_seed(seed, 0));
    bins.reserve(sample.kept.size());
    for (const auto& e : sample.kept)
      bins.push_back(WeightedSketch::Bin{e.item, e.adjusted});
  }
  return MergeResult{MergeKind::unbiased,
                     build_result(UpdateMode::unbiased, m, derive_seed(seed, 1),
                                  a, b, bins)};
}

MergeResult merge_misra_gries_impl(const SketchSnapshot& a,
                                   const SketchSnapshot& b, std::size_t m,
                                   std::uint64_t seed) {
  CombinedMap combined;
  accumulate_misra_gries(combined, a);
  accumulate_misra_gries(combined, b);
  double threshold = 0.0;
  if (combined.size() > m) {
    std::vector<double> counts;
    counts.reserve(combined.size());
    for (const auto& [item, count] : combined) counts.push_back(count);
    std::nth_element(counts.begin(), counts.begin() + m, counts.end(),
                     std::greater<double>());
    threshold = counts[m];
  }
  std::vector<WeightedSketch::Bin> bins;
  for (const auto& [item, count] : combined) {
    const double kept = count - threshold;
    if (kept > 0.0) bins.push_back(WeightedSketch::Bin{item, kept});
  }
  return MergeResult{MergeKind::misra_gries,
                     build_result(UpdateMode::deterministic, m,
                                  derive_seed(seed, 1), a, b, bins)};
}

}  // namespace

MergeResult merge(const SketchSnapshot& a, const SketchSnapshot& b,
                  std::size_t m, MergeKind kind, std::uint64_t seed) {
  if (m < 1) throw std::invalid_argument("merge capacity must be at least 1");
  return kind == MergeKind::unbiased ? merge_unbiased_impl(a, b, m, seed)
                                     : merge_misra_gries_impl(a, b, m, seed);
}

}  // namespace uss
