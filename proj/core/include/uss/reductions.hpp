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

#include "uss/rng.hpp"
#include "uss/sketch.hpp"

namespace uss {

enum class ReductionKind { misra_gries, thresholded_pps };

struct ReducedEntry {
  ItemId item;
  double count;
};

struct ReducedSummary {
  ReductionKind kind;
  std::vector<ReducedEntry> entries;

  double estimate(ItemId item) const {
    for (const ReducedEntry& e : entries)
      if (e.item == item) return e.count;
    return 0.0;
  }
};

/// Misra-Gries view of a sketch: each bin soft-thresholded by the minimum,
/// (count - min_count)+, zero entries dropped. The minimum is 0 below
/// capacity, so the view is then an identity on counts.
template <class Count>
ReducedSummary to_misra_gries(const SpaceSaving<Count>& sketch) {
  const double mn = double(sketch.min_count());
  ReducedSummary out{ReductionKind::misra_gries, {}};
  for (const auto& bin : sketch.bins()) {
    const double adjusted = double(bin.count) - mn;
    if (adjusted > 0.0) out.entries.push_back({bin.item, adjusted});
  }
  return out;
}

/// Solves sum_i min(1, alpha * v_i) = target for alpha by bisection on
/// (0, target / min positive value], tolerance 1e-12 in the sum, at most 200
/// iterations. Zero values are allowed and contribute nothing; at least
/// `target` values must be positive.
double solve_pps_alpha(const std::vector<double>& values, std::size_t target);

/// Probability-proportional-to-size reduction of weighted entries down to
/// exactly min(target, #entries) survivors. Inclusion probabilities are
/// pi_i = min(1, alpha * v_i); survivors carry Horvitz-Thompson adjusted
/// counts v_i / pi_i. The fixed-size draw is systematic sampling over the
/// input order with a random starting point from `rng`.
ReducedSummary reduce_pps(const std::vector<std::pair<ItemId, double>>& entries,
                          std::size_t target, Rng& rng);

}  // namespace uss
