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

#include "uss/estimation.hpp"

#include <cmath>
#include <stdexcept>

namespace uss {

double normal_quantile(double p) {
  if (!(p > 0.0) || !(p < 1.0))
    throw std::invalid_argument("quantile probability must be in (0, 1)");

  // Acklam's piecewise rational approximation to the probit function.
  static const double a[] = {-3.969683028665376e+01, 2.209460984245205e+02,
                             -2.759285104469687e+02, 1.383577518672690e+02,
                             -3.066479806614716e+01, 2.506628277459239e+00};
  static const double b[] = {-5.447609879822406e+01, 1.615858368580409e+02,
                             -1.556989798598866e+02, 6.680131188771972e+01,
                             -1.328068155288572e+01};
  static const double c[] = {-7.784894002430293e-03, -3.223964580411365e-01,
                             -2.400758277161838e+00, -2.549732539343734e+00,
                             4.374664141464968e+00,  2.938163982698783e+00};
  static const double d[] = {7.784695709041462e-03, 3.224671290700398e-01,
                             2.445134137142996e+00, 3.754408661907416e+00};
  const double p_low = 0.02425;

  double x;
  if (p < p_low) {
    const double q = std::sqrt(-2.0 * std::log(p));
    x = (((((c[0] * q + c[1]) * q + c[2]) * q + c[3]) * q + c[4]) * q + c[5]) /
        ((((d[0] * q + d[1]) * q + d[2]) * q + d[3]) * q + 1.0);
  } else if (p <= 1.0 - p_low) {
    const double q = p - 0.5;
    const double r = q * q;
    x = (((((a[0] * r + a[1]) * r + a[2]) * r + a[3]) * r + a[4]) * r + a[5]) * q /
        (((((b[0] * r + b[1]) * r + b[2]) * r + b[3]) * r + b[4]) * r + 1.0);
  } else {
    const double q = std::sqrt(-2.0 * std::log(1.0 - p));
    x = -(((((c[0] * q + c[1]) * q + c[2]) * q + c[3]) * q + c[4]) * q + c[5]) /
        ((((d[0] * q + d[1]) * q + d[2]) * q + d[3]) * q + 1.0);
  }

  // One Halley refinement step brings the absolute error to ~1e-15.
  const double sqrt_two_pi = 2.506628274631000502;
  const double e = 0.5 * std::erfc(-x / 1.4142135623730950488) - p;
  const double u = e * sqrt_two_pi * std::exp(x * x / 2.0);
  x = x - u / (1.0 + x * u / 2.0);
  return x;
}

double pps_variance_bound(double n_i, double pi_i, double alpha) {
  if (!(pi_i > 0.0) || pi_i > 1.0)
    throw std::invalid_argument("inclusion probability must be in (0, 1]");
  if (!(alpha > 0.0))
    throw std::invalid_argument("alpha must be positive");
  return n_i * (1.0 - pi_i) / alpha;
}

double coverage(const std::vector<std::pair<QueryResult, double>>& results) {
  if (results.empty())
    throw std::invalid_argument("coverage requires at least one result");
  std::size_t covered = 0;
  for (const auto& [r, truth] : results)
    if (r.ci_low <= truth && truth <= r.ci_high) ++covered;
  return double(covered) / double(results.size());
}

}  // namespace uss
