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

#include "uss/reductions.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>

namespace uss {

namespace {

// Neumaier-compensated sum of min(1, alpha*v); plain accumulation over a
// thousand entries already exceeds the 1e-12 solver tolerance.
double clipped_sum(const std::vector<double>& values, double alpha) {
  double sum = 0.0;
  double comp = 0.0;
  for (double v : values) {
    const double term = std::min(1.0, alpha * v);
    const double t = sum + term;
    if (std::abs(sum) >= std::abs(term))
      comp += (sum - t) + term;
    else
      comp += (term - t) + sum;
    sum = t;
  }
  return sum + comp;
}

}  // namespace

double solve_pps_alpha(const std::vector<double>& values, std::size_t target) {
  if (target == 0) throw std::invalid_argument("pps target must be at least 1");
  double min_pos = std::numeric_limits<double>::infinity();
  std::size_t positive = 0;
  for (double v : values) {
    if (v < 0.0 || !std::isfinite(v))
      throw std::invalid_argument("pps values must be non-negative and finite");
    if (v > 0.0) {
      ++positive;
      min_pos = std::min(min_pos, v);
    }
  }
  if (positive < target)
    throw std::invalid_argument("pps target exceeds number of positive values");
  if (positive == target) return 1.0 / min_pos;

  double lo = 0.0;
  double hi = double(target) / min_pos;
  double alpha = hi;
  for (int iter = 0; iter < 200; ++iter) {
    alpha = 0.5 * (lo + hi);
    const double f = clipped_sum(values, alpha) - double(target);
    if (std::abs(f) <= 1e-12) return alpha;
    if (f < 0.0)
      lo = alpha;
    else
      hi = alpha;
  }
  return alpha;
}

ReducedSummary reduce_pps(const std::vector<std::pair<ItemId, double>>& entries,
                          std::size_t target, Rng& rng) {
  if (target == 0) throw std::invalid_argument("pps target must be at least 1");
  ReducedSummary out{ReductionKind::thresholded_pps, {}};
  if (entries.empty()) return out;

  std::vector<double> values;
  values.reserve(entries.size());
  bool all_equal = true;
  for (const auto& [item, v] : entries) {
    if (!(v > 0.0) || !std::isfinite(v))
      throw std::invalid_argument("pps entry counts must be positive and finite");
    values.push_back(v);
    all_equal = all_equal && v == values.front();
  }

  const std::size_t n = entries.size();
  if (target >= n) {
    out.entries.reserve(n);
    for (const auto& [item, v] : entries) out.entries.push_back({item, v});
    return out;
  }

  std::vector<double> pi(n);
  if (all_equal) {
    const double p = double(target) / double(n);
    std::fill(pi.begin(), pi.end(), p);
  } else {
    const double alpha = solve_pps_alpha(values, target);
    for (std::size_t i = 0; i < n; ++i) pi[i] = std::min(1.0, alpha * values[i]);
  }

  // Systematic draw: ticks u, u+1, ..., u+target-1 over the cumulative
  // inclusion probabilities. The final cumulative is forced to the exact
  // target so rounding in the solver cannot lose the last tick. Intervals
  // have width <= 1, so each holds at most one tick; the sweep after the
  // main loop only fires if accumulated rounding ever crowds two ticks into
  // one interval, and keeps the output size exact either way.
  const double u = rng.next_double();
  double cum = 0.0;
  double comp = 0.0;
  double tick = u;
  std::size_t ticks_left = target;
  std::vector<char> taken(n, 0);
  out.entries.reserve(target);
  for (std::size_t i = 0; i < n; ++i) {
    const double term = pi[i];
    const double t = cum + term;
    if (std::abs(cum) >= std::abs(term))
      comp += (cum - t) + term;
    else
      comp += (term - t) + cum;
    cum = t;
    double boundary = cum + comp;
    if (i + 1 == n) boundary = double(target);
    if (ticks_left > 0 && tick < boundary) {
      taken[i] = 1;
      out.entries.push_back({entries[i].first, values[i] / pi[i]});
      tick += 1.0;
      --ticks_left;
    }
  }
  while (ticks_left > 0) {
    std::size_t best = n;
    for (std::size_t i = 0; i < n; ++i)
      if (!taken[i] && (best == n || pi[i] > pi[best])) best = i;
    taken[best] = 1;
    out.entries.push_back({entries[best].first, values[best] / pi[best]});
    --ticks_left;
  }
  return out;
}

}  // namespace uss
