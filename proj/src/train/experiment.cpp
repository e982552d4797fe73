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

#include <sstream>

#include "phiseg/errors.hpp"
#include "phiseg/train.hpp"

namespace phiseg {

std::string to_string(ExperimentKind kind) {
  return kind == ExperimentKind::kAllAnnotators ? "all-annotators" : "single-annotator";
}

ExperimentKind experiment_kind_from_string(const std::string& name) {
  if (name == "all-annotators") return ExperimentKind::kAllAnnotators;
  if (name == "single-annotator") return ExperimentKind::kSingleAnnotator;
  throw ConfigError("unknown experiment '" + name + "' (all-annotators | single-annotator)");
}

namespace {

MetricsReport average_over_seeds(const std::vector<const MetricsReport*>& reports) {
  MetricsReport out;
  out.method = reports.front()->method;
  out.dataset = reports.front()->dataset;
  out.num_samples = reports.front()->num_samples;
  out.cases = reports.front()->cases;
  for (std::size_t r = 1; r < reports.size(); ++r) {
    if (reports[r]->cases.size() != out.cases.size()) {
      throw ContractError("seed reports cover different cases");
    }
    for (std::size_t i = 0; i < out.cases.size(); ++i) {
      out.cases[i].ged += reports[r]->cases[i].ged;
      out.cases[i].sncc += reports[r]->cases[i].sncc;
      out.cases[i].dice += reports[r]->cases[i].dice;
    }
  }
  const double n = static_cast<double>(reports.size());
  for (CaseMetrics& c : out.cases) {
    c.ged /= n;
    c.sncc /= n;
    c.dice /= n;
  }
  out.finalize();
  return out;
}

std::vector<double> column(const MetricsReport& r, const std::string& metric) {
  std::vector<double> v;
  for (const CaseMetrics& c : r.cases) {
    v.push_back(metric == "ged" ? c.ged : metric == "sncc" ? c.sncc : c.dice);
  }
  return v;
}

}  // namespace

ExperimentResult run_experiment(const ExperimentConfig& config, const Dataset& dataset) {
  if (config.methods.empty()) throw ConfigError("experiment: no methods given");
  if (config.seeds.empty()) throw ConfigError("experiment: no seeds given");

  ExperimentResult result;
  for (const MethodSpec& method : config.methods) {
    std::vector<const MetricsReport*> seed_reports;
    for (std::uint64_t seed : config.seeds) {
      TrainConfig tc = config.train;
      tc.model = method.model;
      tc.seed = seed;
      tc.policy = config.kind == ExperimentKind::kAllAnnotators
                      ? AnnotatorPolicy::random_per_image()
                      : AnnotatorPolicy::fixed(config.single_annotator);
      std::filesystem::path run_dir;
      if (!config.out_dir.empty()) {
        run_dir = config.out_dir / method.name / ("seed_" + std::to_string(seed));
        tc.checkpoint_dir = run_dir;
      }
      TrainResult trained = train(tc, dataset);

      EvalConfig ec = config.eval;
      ec.method = method.name;
      MetricsReport report = evaluate(trained.best.model, dataset, ec);
      if (!run_dir.empty()) write_metrics_table(run_dir / "metrics.csv", report);

      result.runs.push_back(
          {method.name, seed, trained.best.step, trained.best.val_loss, std::move(report)});
    }
    // Runs of this method are the last |seeds| entries.
    for (std::size_t i = result.runs.size() - config.seeds.size(); i < result.runs.size(); ++i) {
      seed_reports.push_back(&result.runs[i].report);
    }
    result.methods.push_back(average_over_seeds(seed_reports));
  }

  for (std::size_t a = 0; a < result.methods.size(); ++a) {
    for (std::size_t b = a + 1; b < result.methods.size(); ++b) {
      for (const char* metric : {"ged", "sncc", "dice"}) {
        const auto va = column(result.methods[a], metric);
        const auto vb = column(result.methods[b], metric);
        if (va.size() < 2) continue;
        result.significance.push_back({result.methods[a].method, result.methods[b].method, metric,
                                       paired_ttest(va, vb)});
      }
    }
  }
  return result;
}

std::string format_experiment_table(const ExperimentResult& result) {
  std::ostringstream out;
  out << "method,seed,best_step,best_val_loss,ged,sncc,dice\n";
  for (const RunRecord& r : result.runs) {
    out << r.method << ',' << r.seed << ',' << r.best_step << ',' << format_number(r.best_val_loss)
        << ',' << format_number(r.report.mean_ged) << ',' << format_number(r.report.mean_sncc)
        << ',' << format_number(r.report.mean_dice) << '\n';
  }
  for (const MetricsReport& m : result.methods) {
    out << m.method << ",mean,,," << format_number(m.mean_ged) << ','
        << format_number(m.mean_sncc) << ',' << format_number(m.mean_dice) << '\n';
  }
  out << "\n# significance\n";
  out << "method_a,method_b,metric,t,p,df,zero_variance\n";
  for (const SignificanceEntry& s : result.significance) {
    out << s.method_a << ',' << s.method_b << ',' << s.metric << ','
        << format_number(s.test.t_statistic) << ',' << format_number(s.test.p_value) << ','
        << s.test.degrees_of_freedom << ',' << (s.test.zero_variance ? 1 : 0) << '\n';
  }
  return out.str();
}

}  // namespace phiseg
