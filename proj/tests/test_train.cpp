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

#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>

#include "phiseg/errors.hpp"
#include "phiseg/metrics.hpp"
#include "phiseg/samples.hpp"
#include "phiseg/train.hpp"
#include "support.hpp"

namespace phiseg {
namespace {

using json = nlohmann::json;

class TrainTest : public ::testing::Test {
 protected:
  static void SetUpTestSuite() {
    configure_determinism();
    dir_ = new testing::ScratchDir("train");
    SynthSpec small = default_synth_spec();
    small.num_cases = 30;
    small.rows = small.cols = 32;
    generate_dataset(small, *dir_ / "small", false);
    small_ = new Dataset(Dataset::load(*dir_ / "small"));
  }
  static void TearDownTestSuite() {
    delete small_;
    delete dir_;
  }

  static TrainConfig quick_config(bool deterministic = false, long steps = 12) {
    TrainConfig c;
    c.model = make_model_config(2, 3, 32, 32, 4, 1, 2);
    c.model.deterministic = deterministic;
    c.batch_size = 4;
    c.max_steps = steps;
    c.val_interval = 4;
    c.seed = 5;
    return c;
  }

  static testing::ScratchDir* dir_;
  static Dataset* small_;
};
testing::ScratchDir* TrainTest::dir_ = nullptr;
Dataset* TrainTest::small_ = nullptr;

TEST_F(TrainTest, TwoHundredStepsLowerValidationLossOnDeskData) {
  testing::ScratchDir dir("train_desk");
  generate_dataset(default_synth_spec(), dir / "d", false);
  const Dataset desk = Dataset::load(dir / "d");
  for (std::uint64_t seed : {1, 2, 3}) {
    TrainConfig c;
    c.model = make_model_config(2, 4, 64, 64, 8, 2, 2);
    c.max_steps = 200;
    c.val_interval = 200;
    c.seed = seed;
    const TrainResult r = train(c, desk);
    ASSERT_EQ(r.validation.size(), 2u);
    EXPECT_EQ(r.validation[0].step, 0);
    EXPECT_EQ(r.validation[1].step, 200);
    EXPECT_LT(r.validation[1].loss, r.validation[0].loss) << "seed " << seed;
  }
}

TEST_F(TrainTest, DeterministicBaselineLogsNoKl) {
  const TrainResult r = train(quick_config(true), *small_);
  int train_records = 0;
  for (const std::string& line : r.log) {
    const json j = json::parse(line);
    if (j["phase"] == "train") {
      ++train_records;
      EXPECT_FALSE(j.contains("kl"));
      EXPECT_FALSE(j.contains("deep_sup_ce"));
    } else {
      EXPECT_EQ(j["norm"], "frozen");
    }
  }
  EXPECT_EQ(train_records, 12);
}

TEST_F(TrainTest, LatentModelLogsOneKlPerLevel) {
  const TrainResult r = train(quick_config(), *small_);
  const json first = json::parse(r.log[1]);
  ASSERT_EQ(first["phase"], "train");
  EXPECT_EQ(first["norm"], "batch");
  EXPECT_EQ(first["kl"].size(), 2u);
  EXPECT_EQ(first["deep_sup_ce"].size(), 1u);
}

TEST_F(TrainTest, IdenticalConfigsGiveIdenticalLogs) {
  const TrainResult a = train(quick_config(), *small_);
  const TrainResult b = train(quick_config(), *small_);
  EXPECT_EQ(a.log, b.log);
  EXPECT_EQ(parameter_checksum(*a.best.model), parameter_checksum(*b.best.model));
}

TEST_F(TrainTest, SelectedCheckpointHasLowestValidationLoss) {
  const TrainResult r = train(quick_config(false, 16), *small_);
  ASSERT_EQ(r.validation.size(), 5u);
  for (const ValidationPoint& v : r.validation) EXPECT_LE(r.best.val_loss, v.loss);
  const auto best = std::min_element(r.validation.begin(), r.validation.end(),
                                     [](auto& a, auto& b) { return a.loss < b.loss; });
  EXPECT_EQ(r.best.step, best->step);
  // The restored weights reproduce the recorded validation loss.
  PHiSeg model = r.best.model;
  EXPECT_NEAR(validation_loss(model, *small_, quick_config().policy, 4, false), r.best.val_loss,
              1e-9 * std::abs(r.best.val_loss));
}

TEST_F(TrainTest, ElboOnlyValidationExcludesDeepSupervision) {
  PHiSeg model = build_model(quick_config().model, 3);
  const AnnotatorPolicy policy = AnnotatorPolicy::fixed(0);
  EXPECT_LT(validation_loss(model, *small_, policy, 4, true),
            validation_loss(model, *small_, policy, 4, false));
}

TEST_F(TrainTest, CheckpointDirectoryReceivesWeightsAndLog) {
  testing::ScratchDir dir("train_ckpt");
  TrainConfig c = quick_config();
  c.checkpoint_dir = dir.path();
  const TrainResult r = train(c, *small_);
  ASSERT_TRUE(std::filesystem::exists(dir / "best.ckpt"));
  ASSERT_TRUE(std::filesystem::exists(dir / "train_log.jsonl"));
  const Checkpoint back = load_checkpoint(dir / "best.ckpt");
  EXPECT_EQ(back.step, r.best.step);
  EXPECT_DOUBLE_EQ(back.val_loss, r.best.val_loss);
  EXPECT_EQ(back.config.model, c.model);
  EXPECT_EQ(parameter_checksum(*back.model), parameter_checksum(*r.best.model));
}

TEST_F(TrainTest, InvalidConfigsRejected) {
  TrainConfig c = quick_config();
  c.learning_rate = 0.0;
  EXPECT_THROW(c.validate(), ConfigError);
  c = quick_config();
  c.batch_size = 0;
  EXPECT_THROW(c.validate(), ConfigError);
  EXPECT_THROW(train_config_from_json({{"learning_rate", 1e-3}, {"momentum", 0.9}}), ConfigError);
}

TEST_F(TrainTest, ConfigJsonRoundTrip) {
  TrainConfig c = quick_config();
  c.policy = AnnotatorPolicy::fixed(2);
  c.elbo_only_validation = true;
  const TrainConfig back = train_config_from_json(to_json(c));
  EXPECT_EQ(back.model, c.model);
  EXPECT_EQ(back.policy, c.policy);
  EXPECT_EQ(back.max_steps, c.max_steps);
  EXPECT_EQ(back.seed, c.seed);
  EXPECT_TRUE(back.elbo_only_validation);
}

TEST_F(TrainTest, EvaluationReportsEveryTestCaseReproducibly) {
  PHiSeg model = build_model(quick_config().model, 2);
  EvalConfig e;
  e.num_samples = 6;
  const MetricsReport a = evaluate(model, *small_, e);
  const MetricsReport b = evaluate(model, *small_, e);
  ASSERT_EQ(a.cases.size(), small_->indices(Split::kTest).size());
  EXPECT_EQ(format_metrics_table(a), format_metrics_table(b));
  for (const CaseMetrics& m : a.cases) {
    EXPECT_GE(m.sncc, -1.0);
    EXPECT_LE(m.sncc, 1.0);
    EXPECT_GE(m.dice, 0.0);
    EXPECT_LE(m.dice, 1.0);
  }
}

TEST_F(TrainTest, DeterministicGedHasNoSampleDiversityTerm) {
  PHiSeg model = build_model(quick_config(true).model, 2);
  EvalConfig e;
  e.num_samples = 5;
  e.method = "det";
  std::map<std::string, SampleSet> samples;
  const MetricsReport report =
      evaluate(model, *small_, e, [&](const Case& c, const SampleSet& s) { samples[c.id] = s; });
  const std::vector<int> classes = foreground_classes(2);
  for (const CaseMetrics& m : report.cases) {
    const Case& c = small_->find(m.case_id);
    const LabelMap& s = samples.at(m.case_id).labels[0];
    const auto& ys = c.annotations;
    double cross = 0.0, within = 0.0;
    for (const LabelMap& y : ys) cross += jaccard_distance(s, y, classes);
    for (const LabelMap& y : ys)
      for (const LabelMap& y2 : ys) within += jaccard_distance(y, y2, classes);
    cross /= ys.size();
    within /= ys.size() * ys.size();
    EXPECT_NEAR(m.ged, 2 * cross - within, 1e-12) << m.case_id;
  }
}

TEST_F(TrainTest, EvaluationRejectsMismatchedModel) {
  PHiSeg model = build_model(make_model_config(2, 3, 64, 64, 4, 1, 2), 2);
  EXPECT_THROW(evaluate(model, *small_, EvalConfig{}), DimensionMismatch);
  PHiSeg three = build_model(make_model_config(2, 3, 32, 32, 4, 1, 3), 2);
  EXPECT_THROW(evaluate(three, *small_, EvalConfig{}), DimensionMismatch);
}

TEST_F(TrainTest, SingleMethodExperimentHasNoSignificanceSection) {
  ExperimentConfig c;
  c.methods = {{"det", quick_config(true).model}};
  c.seeds = {1};
  c.train = quick_config(true, 4);
  c.eval.num_samples = 2;
  const ExperimentResult r = run_experiment(c, *small_);
  EXPECT_EQ(r.runs.size(), 1u);
  EXPECT_TRUE(r.significance.empty());
  const std::string table = format_experiment_table(r);
  EXPECT_NE(table.find("det"), std::string::npos);
}

TEST_F(TrainTest, DuplicatedMethodIsFlaggedZeroVariance) {
  ExperimentConfig c;
  c.methods = {{"a", quick_config().model}, {"b", quick_config().model}};
  c.seeds = {1};
  c.train = quick_config(false, 4);
  c.eval.num_samples = 3;
  const ExperimentResult r = run_experiment(c, *small_);
  ASSERT_EQ(r.significance.size(), 3u);
  for (const SignificanceEntry& s : r.significance) EXPECT_TRUE(s.test.zero_variance) << s.metric;
  ASSERT_EQ(r.methods.size(), 2u);
  for (std::size_t i = 0; i < r.methods[0].cases.size(); ++i) {
    EXPECT_EQ(r.methods[0].cases[i].ged, r.methods[1].cases[i].ged);
  }
}

TEST_F(TrainTest, ExperimentKindStrings) {
  EXPECT_EQ(to_string(ExperimentKind::kSingleAnnotator), "single-annotator");
  EXPECT_EQ(experiment_kind_from_string("all-annotators"), ExperimentKind::kAllAnnotators);
  EXPECT_THROW(experiment_kind_from_string("some"), ConfigError);
}

}  // namespace
}  // namespace phiseg
