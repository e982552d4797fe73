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

#include <cmath>
#include <string>

#include "phiseg/errors.hpp"
#include "phiseg/samples.hpp"

namespace phiseg {

void SampleSet::validate() const {
  if (num_samples < 1) throw ContractError("sample set is empty");
  if (rows < 1 || cols < 1 || num_classes < 2) throw ContractError("sample set has bad shape");
  if (probs.size() != static_cast<std::size_t>(num_samples) * num_classes * pixels()) {
    throw ContractError("sample set probability buffer has wrong size");
  }
  if (static_cast<int>(labels.size()) != num_samples) {
    throw ContractError("sample set has " + std::to_string(labels.size()) + " label maps for " +
                        std::to_string(num_samples) + " samples");
  }
  for (int n = 0; n < num_samples; ++n) {
    const LabelMap& lm = labels[n];
    if (lm.rows != rows || lm.cols != cols) throw ContractError("sample label map shape mismatch");
    for (std::size_t i = 0; i < pixels(); ++i) {
      double sum = 0.0;
      int best = 0;
      for (int k = 0; k < num_classes; ++k) {
        const float p = prob(n, k, i);
        sum += p;
        if (p > prob(n, best, i)) best = k;
      }
      if (std::abs(sum - 1.0) > 1e-6) throw ContractError("sample probabilities do not sum to 1");
      if (lm.values[i] != best) throw ContractError("sample labels disagree with argmax");
    }
  }
}

LabelMap argmax_labels(std::span<const float> probs, int num_classes, int rows, int cols) {
  const std::size_t pixels = static_cast<std::size_t>(rows) * cols;
  if (probs.size() != pixels * num_classes) throw ContractError("argmax: buffer size mismatch");
  LabelMap out(rows, cols);
  for (std::size_t i = 0; i < pixels; ++i) {
    int best = 0;
    for (int k = 1; k < num_classes; ++k) {
      if (probs[k * pixels + i] > probs[best * pixels + i]) best = k;
    }
    out.values[i] = static_cast<std::uint8_t>(best);
  }
  return out;
}

SampleSet sample_set_from_labels(const std::vector<LabelMap>& labels, int num_classes,
                                 std::uint64_t seed) {
  if (labels.empty()) throw ContractError("sample_set_from_labels: no labels");
  SampleSet ss;
  ss.num_samples = static_cast<int>(labels.size());
  ss.rows = labels.front().rows;
  ss.cols = labels.front().cols;
  ss.num_classes = num_classes;
  ss.seed = seed;
  ss.labels = labels;
  ss.probs.assign(static_cast<std::size_t>(ss.num_samples) * num_classes * ss.pixels(), 0.0f);
  for (int n = 0; n < ss.num_samples; ++n) {
    if (!labels[n].same_shape(labels.front())) throw ContractError("label maps differ in shape");
    labels[n].validate(num_classes);
    for (std::size_t i = 0; i < ss.pixels(); ++i) {
      const int k = labels[n].values[i];
      ss.probs[(static_cast<std::size_t>(n) * num_classes + k) * ss.pixels() + i] = 1.0f;
    }
  }
  return ss;
}

MeanPrediction mean_prediction(const SampleSet& samples) {
  if (samples.num_samples < 1) throw ContractError("mean_prediction: empty sample set");
  MeanPrediction mp;
  mp.rows = samples.rows;
  mp.cols = samples.cols;
  mp.num_classes = samples.num_classes;
  const std::size_t plane = samples.pixels();
  mp.probs.assign(plane * samples.num_classes, 0.0);
  for (int n = 0; n < samples.num_samples; ++n) {
    for (int k = 0; k < samples.num_classes; ++k) {
      for (std::size_t i = 0; i < plane; ++i) mp.probs[k * plane + i] += samples.prob(n, k, i);
    }
  }
  const double inv = 1.0 / samples.num_samples;
  for (double& p : mp.probs) p *= inv;

  mp.labels = LabelMap(mp.rows, mp.cols);
  for (std::size_t i = 0; i < plane; ++i) {
    int best = 0;
    for (int k = 1; k < mp.num_classes; ++k) {
      if (mp.probs[k * plane + i] > mp.probs[best * plane + i]) best = k;
    }
    mp.labels.values[i] = static_cast<std::uint8_t>(best);
  }
  return mp;
}

RealGrid gamma_map(const SampleSet& samples) {
  if (samples.num_samples < 1) throw ContractError("gamma_map: empty sample set");
  const std::size_t plane = samples.pixels();
  const int K = samples.num_classes;
  std::vector<int> counts(plane * K, 0);
  for (const LabelMap& lm : samples.labels) {
    for (std::size_t i = 0; i < plane; ++i) ++counts[lm.values[i] * plane + i];
  }
  // Mean over samples of -log(freq of that sample's label) equals
  // -sum_k freq_k log(freq_k + eps); grouping by label keeps it order-free.
  RealGrid gamma(samples.rows, samples.cols);
  const double n = samples.num_samples;
  for (std::size_t i = 0; i < plane; ++i) {
    double g = 0.0;
    for (int k = 0; k < K; ++k) {
      const int c = counts[k * plane + i];
      if (c == 0) continue;
      const double freq = c / n;
      g -= freq * std::log(freq + kLogEpsilon);
    }
    gamma.values[i] = g < 0.0 ? 0.0 : g;
  }
  return gamma;
}

}  // namespace phiseg
