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
#include <functional>
#include <memory>
#include <unordered_set>
#include <utility>
#include <vector>

#include "uss/sketch.hpp"

namespace uss {

/// Membership test for a subset-sum query: either an explicit item set or an
/// arbitrary pure predicate. Cheap to copy.
class SubsetQuery {
 public:
  static SubsetQuery of_items(std::vector<ItemId> ids) {
    SubsetQuery q;
    q.set_ = std::make_shared<std::unordered_set<ItemId>>(ids.begin(), ids.end());
    return q;
  }

  static SubsetQuery of_predicate(std::function<bool(ItemId)> pred) {
    SubsetQuery q;
    q.pred_ = std::make_shared<std::function<bool(ItemId)>>(std::move(pred));
    return q;
  }

  bool contains(ItemId item) const {
    if (set_) return set_->count(item) != 0;
    return (*pred_)(item);
  }

 private:
  SubsetQuery() = default;
  std::shared_ptr<const std::unordered_set<ItemId>> set_;
  std::shared_ptr<const std::function<bool(ItemId)>> pred_;
};

struct QueryResult {
  double estimate = 0.0;
  /// C_S: number of sketch bins with labels in the subset, floored at 1.
  std::uint64_t items_in_sketch = 1;
  double variance_estimate = 0.0;
  double ci_low = 0.0;
  double ci_high = 0.0;
  double nominal_level = 0.95;
};

/// Inverse standard normal CDF, Acklam's rational approximation (absolute
/// error under 1e-6 everywhere, ~1e-9 typical). p must be in (0, 1).
double normal_quantile(double p);

/// Plain subset-sum point estimate: sum of counts over bins whose label is
/// in the subset.
template <class Count>
double subset_estimate(const SpaceSaving<Count>& sketch, const SubsetQuery& query) {
  double sum = 0.0;
  for (const auto& bin : sketch.unordered_bins())
    if (query.contains(bin.item)) sum += double(bin.count);
  return sum;
}

/// Subset sum with the variance estimate Var = min_count^2 * C_S and a
/// normal confidence interval truncated below at zero.
template <class Count>
QueryResult subset_sum(const SpaceSaving<Count>& sketch, const SubsetQuery& query,
                       double level = 0.95) {
  if (!(level > 0.0) || !(level < 1.0))
    throw std::invalid_argument("confidence level must be in (0, 1)");
  double sum = 0.0;
  std::uint64_t members = 0;
  for (const auto& bin : sketch.unordered_bins()) {
    if (query.contains(bin.item)) {
      sum += double(bin.count);
      ++members;
    }
  }
  QueryResult r;
  r.estimate = sum;
  r.items_in_sketch = std::max<std::uint64_t>(1, members);
  const double mn = double(sketch.min_count());
  r.variance_estimate = mn * mn * double(r.items_in_sketch);
  const double z = normal_quantile(0.5 + level / 2.0);
  const double half = z * std::sqrt(r.variance_estimate);
  r.ci_low = std::max(0.0, sum - half);
  r.ci_high = sum + half;
  r.nominal_level = level;
  return r;
}

/// Per-item variance bound of a fixed-size PPS sample, n_i (1 - pi_i) / alpha.
/// For unsaturated items (pi_i = alpha * n_i < 1) this equals the exact
/// Horvitz-Thompson variance n_i^2 (1 - pi_i) / pi_i; saturated items get 0.
double pps_variance_bound(double n_i, double pi_i, double alpha);

/// Fraction of results whose interval contains the paired true count.
double coverage(const std::vector<std::pair<QueryResult, double>>& results);

}  // namespace uss
