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

#include "phiseg/errors.hpp"
#include "phiseg/inference.hpp"
#include "phiseg/metrics.hpp"
#include "phiseg/train.hpp"

namespace phiseg {

MetricsReport evaluate(PHiSeg& model, const Dataset& dataset, const EvalConfig& config,
                       const SampleSink& sink) {
  const ModelConfig& mc = model->config();
  if (dataset.rows() != mc.rows || dataset.cols() != mc.cols ||
      dataset.num_classes() != mc.num_classes) {
    throw DimensionMismatch("model expects " + std::to_string(mc.rows) + "x" +
                            std::to_string(mc.cols) + " images with K=" +
                            std::to_string(mc.num_classes) + ", dataset has " +
                            std::to_string(dataset.rows()) + "x" + std::to_string(dataset.cols()) +
                            " with K=" + std::to_string(dataset.num_classes()));
  }
  if (config.num_samples < 1) throw ConfigError("eval: num_samples must be >= 1");
  const int M = dataset.num_annotators();
  std::vector<int> scope = config.annotators;
  if (scope.empty()) {
    for (int m = 0; m < M; ++m) scope.push_back(m);
  }
  for (int m : scope) {
    if (m < 0 || m >= M) throw ConfigError("eval: annotator " + std::to_string(m) + " out of range");
  }
  if (config.reference_annotator < 0 || config.reference_annotator >= M) {
    throw ConfigError("eval: reference annotator out of range");
  }
  const std::vector<int> classes =
      config.classes.empty() ? foreground_classes(mc.num_classes) : config.classes;
  const auto indices = dataset.indices(config.split);
  if (indices.empty()) throw ContractError("eval: split " + to_string(config.split) + " is empty");

  MetricsReport report;
  report.method = config.method;
  report.dataset = config.dataset;
  report.num_samples = config.num_samples;
  for (std::size_t idx : indices) {
    const Case& c = dataset.cases()[idx];
    const SampleSet samples = draw_samples(model, case_image_tensor(c), config.num_samples,
                                           sample_seed(config.seed, c.id));
    AnnotationSet ann;
    for (int m : scope) {
      ann.masks.push_back(c.annotations[m]);
      ann.annotator_ids.push_back("ann" + std::to_string(m));
    }
    CaseMetrics cm;
    cm.case_id = c.id;
    cm.ged = ged_squared(samples, ann, classes, config.estimator);
    cm.sncc = s_ncc(samples, ann);
    cm.dice = dice(mean_prediction(samples).labels, c.annotations[config.reference_annotator],
                   classes)
                  .mean;
    report.cases.push_back(cm);
    if (sink) sink(c, samples);
  }
  report.finalize();
  return report;
}

}  // namespace phiseg
