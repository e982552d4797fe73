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

#include <torch/torch.h>

#include <cstdint>
#include <filesystem>
#include <functional>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "json.hpp"
#include "phiseg/config.hpp"
#include "phiseg/data.hpp"
#include "phiseg/metrics.hpp"
#include "phiseg/model.hpp"
#include "phiseg/report.hpp"
#include "phiseg/samples.hpp"

namespace phiseg {

// Single-threaded intra-op execution and deterministic kernels, so that
// identical configs and seeds give identical runs.
void configure_determinism();

// Host buffers to NCHW tensors.
torch::Tensor images_to_tensor(const std::vector<float>& images, int batch, int rows, int cols);
torch::Tensor masks_to_tensor(const std::vector<std::uint8_t>& masks, int batch, int rows,
                              int cols);
torch::Tensor case_image_tensor(const Case& c);  // [1, 1, rows, cols]
torch::Tensor label_tensor(const LabelMap& labels);  // [1, rows, cols] int64

struct TrainConfig {
  ModelConfig model;
  double learning_rate = 1e-3;
  int batch_size = 8;
  long max_steps = 5000;
  long val_interval = 250;
  AnnotatorPolicy policy;
  std::uint64_t seed = 1;
  // When set, best.ckpt and train_log.jsonl are written here.
  std::filesystem::path checkpoint_dir;
  // Select on recon + weighted KL only, leaving out the deep-supervision terms.
  bool elbo_only_validation = false;

  void validate() const;
};

nlohmann::json to_json(const TrainConfig& config);
// `base` supplies values for keys that are absent. Unknown keys are rejected.
TrainConfig train_config_from_json(const nlohmann::json& j, const TrainConfig& base = {});

struct Checkpoint {
  PHiSeg model{nullptr};
  long step = 0;
  double val_loss = 0.0;
  TrainConfig config;
};

struct ValidationPoint {
  long step = 0;
  double loss = 0.0;
};

struct TrainResult {
  Checkpoint best;
  std::vector<ValidationPoint> validation;
  std::vector<std::string> log;  // one JSON record per line
};

// Mean validation objective over the whole split with frozen normalisation.
// Under the random policy every annotation of every case is scored once.
double validation_loss(PHiSeg& model, const Dataset& dataset, const AnnotatorPolicy& policy,
                       int batch_size, bool elbo_only);

// Adam on the total loss with one posterior sample per level per step.
// Validates at step 0, every `val_interval` steps and at the last step, and
// returns the weights with the lowest validation loss. Throws
// DivergenceError on a non-finite loss.
TrainResult train(const TrainConfig& config, const Dataset& dataset);

void save_checkpoint(const std::filesystem::path& path, const Checkpoint& ckpt);
Checkpoint load_checkpoint(const std::filesystem::path& path);

struct EvalConfig {
  int num_samples = 100;
  Split split = Split::kTest;
  std::vector<int> annotators;     // scope for GED and S_NCC; empty = all
  int reference_annotator = 0;     // Dice target
  std::vector<int> classes;        // empty = foreground classes
  GedEstimator estimator = GedEstimator::kBiased;
  std::uint64_t seed = 7;
  std::string method = "phiseg";
  std::string dataset = "synthetic";
};

// Called once per evaluated case with the drawn samples.
using SampleSink = std::function<void(const Case&, const SampleSet&)>;

// Throws DimensionMismatch if the model and dataset disagree on image size
// or class count.
MetricsReport evaluate(PHiSeg& model, const Dataset& dataset, const EvalConfig& config,
                       const SampleSink& sink = {});

struct MethodSpec {
  std::string name;
  ModelConfig model;
};

enum class ExperimentKind { kAllAnnotators, kSingleAnnotator };

std::string to_string(ExperimentKind kind);
ExperimentKind experiment_kind_from_string(const std::string& name);

struct ExperimentConfig {
  ExperimentKind kind = ExperimentKind::kAllAnnotators;
  std::vector<MethodSpec> methods;
  std::vector<std::uint64_t> seeds;
  TrainConfig train;  // model and policy are replaced per method/experiment
  EvalConfig eval;
  int single_annotator = 0;
  std::filesystem::path out_dir;  // optional; per-run checkpoints and tables
};

struct RunRecord {
  std::string method;
  std::uint64_t seed = 0;
  long best_step = 0;
  double best_val_loss = 0.0;
  MetricsReport report;
};

struct SignificanceEntry {
  std::string method_a;
  std::string method_b;
  std::string metric;  // ged, sncc or dice
  TTestResult test;
};

struct ExperimentResult {
  std::vector<RunRecord> runs;
  std::vector<MetricsReport> methods;  // per-case values averaged over seeds
  std::vector<SignificanceEntry> significance;
};

ExperimentResult run_experiment(const ExperimentConfig& config, const Dataset& dataset);

// Comma-separated comparison table followed by a `# significance` annex.
std::string format_experiment_table(const ExperimentResult& result);

}  // namespace phiseg
