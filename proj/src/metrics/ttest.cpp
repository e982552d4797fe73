// Copyright 2026 The PHiSeg Toolkit Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#include <algorithm>
#include <cmath>

#include <boost/math/distributions/students_t.hpp>

#include "phiseg/errors.hpp"
#include "phiseg/metrics.hpp"

namespace phiseg {

TTestResult paired_ttest(std::span<const double> values_a, std::span<const double> values_b) {
  if (values_a.size() != values_b.size()) {
    throw ContractError("paired_ttest: samples differ in length");
  }
  if (values_a.size() < 2) throw ContractError("paired_ttest: need at least two pairs");

  const std::size_t n = values_a.size();
  double mean = 0.0;
  for (std::size_t i = 0; i < n; ++i) mean += values_a[i] - values_b[i];
  mean /= static_cast<double>(n);
  double ss = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    const double d = values_a[i] - values_b[i] - mean;
    ss += d * d;
  }
  const double var = ss / static_cast<double>(n - 1);

  TTestResult out;
  out.degrees_of_freedom = static_cast<int>(n - 1);
  // Relative guard: differences that are equal up to rounding count as constant.
  double scale = 0.0;
  for (std::size_t i = 0; i < n; ++i) scale = std::max(scale, std::abs(values_a[i] - values_b[i]));
  if (var <= 1e-24 * std::max(1.0, scale * scale)) {
    out.zero_variance = true;
    const bool zero_mean = std::abs(mean) <= 1e-12 * std::max(1.0, scale);
    out.t_statistic = zero_mean ? 0.0 : std::copysign(INFINITY, mean);
    out.p_value = zero_mean ? 1.0 : 0.0;
    return out;
  }
  out.t_statistic = mean / std::sqrt(var / static_cast<double>(n));
  const boost::math::students_t dist(static_cast<double>(out.degrees_of_freedom));
  out.p_value = 2.0 * boost::math::cdf(boost::math::complement(dist, std::abs(out.t_statistic)));
  return out;
}

}  // namespace phiseg
