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

#include <array>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "json.hpp"
#include "phiseg/grid.hpp"

namespace phiseg {

enum class Split { kTrain, kVal, kTest };

std::string to_string(Split split);
Split split_from_string(const std::string& name);

// How one synthetic annotator deviates from the latent object boundary.
struct AnnotatorStyle {
  double threshold_offset = 0.0;  // in units of SynthSpec::threshold_step
  int radius_offset = 0;          // >0 dilates, <0 erodes (pixels)
  double omission_prob = 0.0;     // chance the annotator marks nothing

  friend bool operator==(const AnnotatorStyle&, const AnnotatorStyle&) = default;
};

struct SynthSpec {
  int num_cases = 300;
  int rows = 64;
  int cols = 64;
  int num_classes = 2;
  std::vector<AnnotatorStyle> annotators;
  double threshold_step = 0.1;
  double noise_amplitude = 0.35;
  double blur_scale = 1.0;        // std (px) of the image smoothing kernel
  double shape_jitter = 0.25;     // amplitude of the smooth per-case shape field
  double annotator_jitter = 0.05; // amplitude of per-annotation boundary noise
  std::array<double, 3> split_ratios{0.6, 0.2, 0.2};
  std::uint64_t seed = 20190605;

  void validate() const;

  friend bool operator==(const SynthSpec&, const SynthSpec&) = default;
};

// 64x64, K = 2, four annotators mixing boundary-shape and omission disagreement.
SynthSpec default_synth_spec();

nlohmann::json to_json(const SynthSpec& spec);
SynthSpec synth_spec_from_json(const nlohmann::json& j);

struct Case {
  std::string id;
  int rows = 0;
  int cols = 0;
  std::vector<float> image;  // single channel, row-major, standardised
  std::vector<LabelMap> annotations;
  Split split = Split::kTrain;
};

std::string case_id(int index);

// Pure function of (spec, index); split is left at kTrain.
Case synthesize_case(const SynthSpec& spec, int index);

// Case-level random partition. Sizes are round(n * r0), round(n * r1), rest.
std::vector<Split> split_cases(std::size_t num_cases, const std::array<double, 3>& ratios,
                               std::uint64_t seed);

inline constexpr int kDatasetFormatVersion = 1;

class Dataset {
 public:
  static Dataset load(const std::filesystem::path& root);

  const std::filesystem::path& root() const { return root_; }
  int rows() const { return rows_; }
  int cols() const { return cols_; }
  int num_classes() const { return num_classes_; }
  int num_annotators() const { return num_annotators_; }
  const std::vector<Case>& cases() const { return cases_; }
  const nlohmann::json& spec_echo() const { return spec_echo_; }

  std::vector<std::size_t> indices(Split split) const;
  const Case& find(const std::string& id) const;

  // Re-partitions the cases and rewrites the manifest.
  void resplit(const std::array<double, 3>& ratios, std::uint64_t seed);

 private:
  friend void generate_dataset(const SynthSpec&, const std::filesystem::path&, bool);
  void write_manifest() const;

  std::filesystem::path root_;
  int rows_ = 0;
  int cols_ = 0;
  int num_classes_ = 0;
  int num_annotators_ = 0;
  std::vector<Case> cases_;
  nlohmann::json spec_echo_;
};

// Writes manifest.json plus per-case binaries under `dir`. Refuses to touch
// an existing non-empty directory unless `force`. Throws IoError.
void generate_dataset(const SynthSpec& spec, const std::filesystem::path& dir, bool force);

struct AnnotatorPolicy {
  enum class Kind { kRandomPerImage, kFixed };
  Kind kind = Kind::kRandomPerImage;
  int annotator = 0;

  static AnnotatorPolicy random_per_image() { return {}; }
  static AnnotatorPolicy fixed(int m) { return {Kind::kFixed, m}; }

  std::string str() const;  // "random" or "fixed:<m>"
  static AnnotatorPolicy parse(const std::string& text);

  friend bool operator==(const AnnotatorPolicy&, const AnnotatorPolicy&) = default;
};

struct Batch {
  int rows = 0;
  int cols = 0;
  std::vector<std::size_t> case_indices;
  std::vector<int> annotator_ids;
  std::vector<float> images;         // [B][rows][cols]
  std::vector<std::uint8_t> masks;   // [B][rows][cols]

  int size() const { return static_cast<int>(case_indices.size()); }
};

Batch make_batch(const Dataset& dataset, const std::vector<std::size_t>& case_indices,
                 const std::vector<int>& annotator_ids);

// Endless stream over one split. Each epoch visits every case once in a
// freshly shuffled order; the final batch of an epoch may be short.
class BatchIterator {
 public:
  BatchIterator(const Dataset& dataset, Split split, int batch_size, AnnotatorPolicy policy,
                std::uint64_t seed);

  Batch next();
  int epoch() const { return epoch_; }
  std::size_t batches_per_epoch() const;

 private:
  void reshuffle();

  const Dataset* dataset_;
  std::vector<std::size_t> order_;
  std::size_t cursor_ = 0;
  int batch_size_;
  AnnotatorPolicy policy_;
  std::uint64_t seed_;
  int epoch_ = 0;
  std::uint64_t draws_ = 0;
};

}  // namespace phiseg
