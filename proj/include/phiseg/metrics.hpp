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

#pragma once

#include <span>
#include <string>
#include <vector>

#include "phiseg/grid.hpp"
#include "phiseg/samples.hpp"

namespace phiseg {

// Ground-truth masks from M annotators for one image.
struct AnnotationSet {
  std::vector<LabelMap> masks;
  std::vector<std::string> annotator_ids;

  void validate() const;
};

// Classes 1..K-1.
std::vector<int> foreground_classes(int num_classes);

double intersection_over_union(const LabelMap& a, const LabelMap& b, int label);

// 1 - mean IoU over `classes`; a class absent from both masks has IoU 1.
double jaccard_distance(const LabelMap& a, const LabelMap& b, std::span<const int> classes);

enum class GedEstimator {
  kBiased,    // all pairs, identical-index pairs included
  kUnbiased,  // identical-index pairs excluded from the within-set terms
};

// Squared generalised energy distance 2E[d(s,y)] - E[d(s,s')] - E[d(y,y')]
// with d = jaccard_distance. Not clamped at zero.
double ged_squared(std::span<const LabelMap> samples, std::span<const LabelMap> annotations,
                   std::span<const int> classes, GedEstimator estimator = GedEstimator::kBiased);
double ged_squared(const SampleSet& samples, const AnnotationSet& annotations,
                   std::span<const int> classes, GedEstimator estimator = GedEstimator::kBiased);

struct DiceScore {
  std::vector<double> per_class;
  double mean = 0.0;
};

// 2|A n B| / (|A| + |B|) per class; a class absent from both masks scores 1.
DiceScore dice(const LabelMap& pred, const LabelMap& gt, std::span<const int> classes);

// Per-pixel mean over samples of -log p_n(y_i), using soft sample probabilities.
RealGrid ce_error_map(const SampleSet& samples, const LabelMap& y);

// Normalised cross correlation; 0 if either map has std below 1e-10.
double ncc(const RealGrid& a, const RealGrid& b);

// Mean over annotators of ncc(gamma_map(samples), ce_error_map(samples, y_m)).
double s_ncc(const SampleSet& samples, const AnnotationSet& annotations);

struct TTestResult {
  double t_statistic = 0.0;
  double p_value = 1.0;
  int degrees_of_freedom = 0;
  // Differences had zero variance; p is 1 for a zero mean difference, else 0.
  bool zero_variance = false;
};

// Two-sided paired Student t-test on values_a - values_b.
TTestResult paired_ttest(std::span<const double> values_a, std::span<const double> values_b);

}  // namespace phiseg
