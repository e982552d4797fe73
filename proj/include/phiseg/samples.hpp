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

#include <cstdint>
#include <filesystem>
#include <span>
#include <vector>

#include "phiseg/grid.hpp"

namespace phiseg {

// N decoded segmentation samples for one image.
struct SampleSet {
  int num_samples = 0;
  int rows = 0;
  int cols = 0;
  int num_classes = 0;
  std::uint64_t seed = 0;
  std::vector<float> probs;  // [N][K][rows][cols] softmax probabilities
  std::vector<LabelMap> labels;

  std::size_t pixels() const { return static_cast<std::size_t>(rows) * cols; }
  float prob(int n, int k, std::size_t pixel) const {
    return probs[(static_cast<std::size_t>(n) * num_classes + k) * pixels() + pixel];
  }

  // Checks shapes, per-pixel normalisation (1e-6) and argmax consistency.
  void validate() const;
};

// Builds a sample set whose probabilities are the one-hot encodings of `labels`.
SampleSet sample_set_from_labels(const std::vector<LabelMap>& labels, int num_classes,
                                 std::uint64_t seed = 0);

// Argmax over classes; ties go to the lowest class index.
LabelMap argmax_labels(std::span<const float> probs, int num_classes, int rows, int cols);

struct MeanPrediction {
  int rows = 0;
  int cols = 0;
  int num_classes = 0;
  std::vector<double> probs;  // [K][rows][cols]
  LabelMap labels;
};

MeanPrediction mean_prediction(const SampleSet& samples);

inline constexpr double kLogEpsilon = 1e-8;

// Expected cross entropy between the mean hard segmentation and the samples.
// The mean is the per-pixel frequency of each label among the samples.
RealGrid gamma_map(const SampleSet& samples);

// Binary interchange format: header (magic, version, N, rows, cols, K, seed),
// N label planes as uint8, then N*K probability planes as little-endian float32.
void write_sample_set(const std::filesystem::path& path, const SampleSet& samples);
SampleSet read_sample_set(const std::filesystem::path& path);

}  // namespace phiseg
