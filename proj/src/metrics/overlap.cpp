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

#include <string>

#include "phiseg/errors.hpp"
#include "phiseg/metrics.hpp"

namespace phiseg {

namespace {

struct OverlapCounts {
  std::size_t in_a = 0;
  std::size_t in_b = 0;
  std::size_t both = 0;
};

OverlapCounts count_overlap(const LabelMap& a, const LabelMap& b, int label) {
  OverlapCounts c;
  for (std::size_t i = 0; i < a.values.size(); ++i) {
    const bool pa = a.values[i] == label;
    const bool pb = b.values[i] == label;
    c.in_a += pa;
    c.in_b += pb;
    c.both += pa && pb;
  }
  return c;
}

void check_pair(const LabelMap& a, const LabelMap& b, std::span<const int> classes) {
  if (!a.same_shape(b) || a.values.size() != b.values.size()) {
    throw ContractError("masks differ in shape");
  }
  if (classes.empty()) throw ContractError("class list is empty");
}

}  // namespace

void AnnotationSet::validate() const {
  if (masks.empty()) throw ContractError("annotation set is empty");
  for (const LabelMap& m : masks) {
    if (!m.same_shape(masks.front())) throw ContractError("annotations differ in shape");
  }
  if (!annotator_ids.empty() && annotator_ids.size() != masks.size()) {
    throw ContractError("annotator id count does not match mask count");
  }
}

std::vector<int> foreground_classes(int num_classes) {
  std::vector<int> out;
  for (int k = 1; k < num_classes; ++k) out.push_back(k);
  return out;
}

double intersection_over_union(const LabelMap& a, const LabelMap& b, int label) {
  const OverlapCounts c = count_overlap(a, b, label);
  const std::size_t uni = c.in_a + c.in_b - c.both;
  if (uni == 0) return 1.0;
  return static_cast<double>(c.both) / static_cast<double>(uni);
}

double jaccard_distance(const LabelMap& a, const LabelMap& b, std::span<const int> classes) {
  check_pair(a, b, classes);
  double iou = 0.0;
  for (int k : classes) iou += intersection_over_union(a, b, k);
  return 1.0 - iou / static_cast<double>(classes.size());
}

DiceScore dice(const LabelMap& pred, const LabelMap& gt, std::span<const int> classes) {
  check_pair(pred, gt, classes);
  DiceScore out;
  for (int k : classes) {
    const OverlapCounts c = count_overlap(pred, gt, k);
    const std::size_t denom = c.in_a + c.in_b;
    out.per_class.push_back(denom == 0 ? 1.0
                                       : 2.0 * static_cast<double>(c.both) /
                                             static_cast<double>(denom));
  }
  double sum = 0.0;
  for (double d : out.per_class) sum += d;
  out.mean = sum / static_cast<double>(out.per_class.size());
  return out;
}

}  // namespace phiseg
