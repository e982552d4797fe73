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

#include <bit>
#include <cstdint>

#include "phiseg/errors.hpp"
#include "phiseg/metrics.hpp"

namespace phiseg {

namespace {

// One bit plane per listed class, so pairwise IoU reduces to popcounts.
class PackedMask {
 public:
  PackedMask(const LabelMap& m, std::span<const int> classes) {
    const std::size_t words = (m.values.size() + 63) / 64;
    planes_.reserve(classes.size());
    for (int k : classes) {
      Plane p{std::vector<std::uint64_t>(words, 0), 0};
      for (std::size_t i = 0; i < m.values.size(); ++i) {
        if (m.values[i] == k) p.bits[i / 64] |= std::uint64_t{1} << (i % 64);
      }
      for (std::uint64_t w : p.bits) p.count += std::popcount(w);
      planes_.push_back(std::move(p));
    }
  }

  double distance(const PackedMask& other) const {
    double iou = 0.0;
    for (std::size_t c = 0; c < planes_.size(); ++c) {
      const Plane& a = planes_[c];
      const Plane& b = other.planes_[c];
      std::size_t both = 0;
      for (std::size_t w = 0; w < a.bits.size(); ++w) both += std::popcount(a.bits[w] & b.bits[w]);
      const std::size_t uni = a.count + b.count - both;
      iou += uni == 0 ? 1.0 : static_cast<double>(both) / static_cast<double>(uni);
    }
    return 1.0 - iou / static_cast<double>(planes_.size());
  }

 private:
  struct Plane {
    std::vector<std::uint64_t> bits;
    std::size_t count;
  };
  std::vector<Plane> planes_;
};

std::vector<PackedMask> pack(std::span<const LabelMap> masks, std::span<const int> classes,
                             const LabelMap& reference) {
  std::vector<PackedMask> out;
  out.reserve(masks.size());
  for (const LabelMap& m : masks) {
    if (!m.same_shape(reference) || m.values.size() != reference.values.size()) {
      throw ContractError("ged_squared: masks differ in shape");
    }
    out.emplace_back(m, classes);
  }
  return out;
}

double mean_cross(const std::vector<PackedMask>& a, const std::vector<PackedMask>& b) {
  double sum = 0.0;
  for (const PackedMask& x : a) {
    for (const PackedMask& y : b) sum += x.distance(y);
  }
  return sum / (static_cast<double>(a.size()) * static_cast<double>(b.size()));
}

double mean_within(const std::vector<PackedMask>& a, GedEstimator estimator) {
  const std::size_t n = a.size();
  double sum = 0.0;
  // d is symmetric and d(x, x) = 0, so only the strict upper triangle is needed.
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = i + 1; j < n; ++j) sum += 2.0 * a[i].distance(a[j]);
  }
  const double pairs = estimator == GedEstimator::kBiased
                           ? static_cast<double>(n) * static_cast<double>(n)
                           : static_cast<double>(n) * static_cast<double>(n - 1);
  return sum / pairs;
}

}  // namespace

double ged_squared(std::span<const LabelMap> samples, std::span<const LabelMap> annotations,
                   std::span<const int> classes, GedEstimator estimator) {
  if (samples.empty() || annotations.empty()) {
    throw ContractError("ged_squared: need at least one sample and one annotation");
  }
  if (classes.empty()) throw ContractError("ged_squared: class list is empty");
  if (estimator == GedEstimator::kUnbiased && (samples.size() < 2 || annotations.size() < 2)) {
    throw ContractError("ged_squared: unbiased estimator needs at least two of each");
  }
  const LabelMap& ref = samples.front();
  const auto s = pack(samples, classes, ref);
  const auto y = pack(annotations, classes, ref);
  return 2.0 * mean_cross(s, y) - mean_within(s, estimator) - mean_within(y, estimator);
}

double ged_squared(const SampleSet& samples, const AnnotationSet& annotations,
                   std::span<const int> classes, GedEstimator estimator) {
  annotations.validate();
  return ged_squared(std::span<const LabelMap>(samples.labels),
                     std::span<const LabelMap>(annotations.masks), classes, estimator);
}

}  // namespace phiseg
