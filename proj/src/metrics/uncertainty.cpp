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

#include "phiseg/errors.hpp"
#include "phiseg/metrics.hpp"

namespace phiseg {

RealGrid ce_error_map(const SampleSet& samples, const LabelMap& y) {
  if (samples.num_samples < 1) throw ContractError("ce_error_map: empty sample set");
  if (y.rows != samples.rows || y.cols != samples.cols) {
    throw ContractError("ce_error_map: annotation shape differs from samples");
  }
  y.validate(samples.num_classes);
  RealGrid out(samples.rows, samples.cols);
  for (int n = 0; n < samples.num_samples; ++n) {
    for (std::size_t i = 0; i < samples.pixels(); ++i) {
      out.values[i] -= std::log(static_cast<double>(samples.prob(n, y.values[i], i)) + kLogEpsilon);
    }
  }
  for (double& v : out.values) v /= samples.num_samples;
  return out;
}

double ncc(const RealGrid& a, const RealGrid& b) {
  if (!a.same_shape(b) || a.size() != b.size() || a.size() == 0) {
    throw ContractError("ncc: maps differ in shape");
  }
  const double n = static_cast<double>(a.size());
  double mean_a = 0.0, mean_b = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    mean_a += a.values[i];
    mean_b += b.values[i];
  }
  mean_a /= n;
  mean_b /= n;
  double var_a = 0.0, var_b = 0.0, cov = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    const double da = a.values[i] - mean_a;
    const double db = b.values[i] - mean_b;
    var_a += da * da;
    var_b += db * db;
    cov += da * db;
  }
  const double std_a = std::sqrt(var_a / n);
  const double std_b = std::sqrt(var_b / n);
  if (std_a < 1e-10 || std_b < 1e-10) return 0.0;
  const double r = cov / n / (std_a * std_b);
  return std::clamp(r, -1.0, 1.0);
}

double s_ncc(const SampleSet& samples, const AnnotationSet& annotations) {
  annotations.validate();
  const RealGrid gamma = gamma_map(samples);
  double sum = 0.0;
  for (const LabelMap& y : annotations.masks) sum += ncc(gamma, ce_error_map(samples, y));
  return sum / static_cast<double>(annotations.masks.size());
}

}  // namespace phiseg
