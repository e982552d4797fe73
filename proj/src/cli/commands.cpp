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

#include <CLI11.hpp>

#include <algorithm>
#include <cstdio>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>

#include "phiseg/cli.hpp"
#include "phiseg/errors.hpp"
#include "phiseg/inference.hpp"
#include "phiseg/plot.hpp"
#include "phiseg/samples.hpp"

namespace phiseg::cli {

namespace {

namespace fs = std::filesystem;

struct Flags {
  std::string config;
  std::optional<std::uint64_t> seed;
  bool force = false;
  std::string out;

  // make-data
  std::string data_dir;
  std::optional<int> cases;
  // train
  std::string method;
  std::optional<int> latent_levels, resolution_levels, base_channels, batch_size;
  std::optional<long> max_steps, val_interval;
  std::string policy;
  // eval / sample / plot
  std::vector<std::string> runs;
  std::optional<int> samples, save_cases, n;
  std::string split;
  std::vector<std::string> case_ids;
};

std::string sample_file_name(const std::string& case_id) { return case_id + ".pss"; }

void refuse_overwrite(const fs::path& p, bool force) {
  if (fs::exists(p) && !force) {
    throw IoError(p.string() + " already exists; pass --force to overwrite");
  }
}

std::string read_text(const fs::path& p) {
  std::ifstream in(p);
  if (!in) throw IoError("cannot read " + p.string());
  std::stringstream buf;
  buf << in.rdbuf();
  return buf.str();
}

void write_text(const fs::path& p, const std::string& text) {
  std::ofstream out(p, std::ios::trunc);
  if (!out || !(out << text)) throw IoError("cannot write " + p.string());
}

Dataset load_dataset(const RunConfig& rc) { return Dataset::load(data_section(rc).dir); }

Checkpoint load_run(const RunConfig& rc, const std::string& run) {
  const fs::path ckpt = run_dir(rc, run) / "best.ckpt";
  if (!fs::exists(ckpt)) throw IoError("no checkpoint at " + ckpt.string() + "; run train first");
  return load_checkpoint(ckpt);
}

int cmd_make_data(RunConfig& rc, const Flags& f, std::ostream& out) {
  if (!f.data_dir.empty()) rc.data["dir"] = f.data_dir;
  if (f.cases) rc.data["num_cases"] = *f.cases;
  if (f.seed) rc.data["seed"] = *f.seed;
  const DataSection data = data_section(rc);
  generate_dataset(data.spec, data.dir, f.force);
  out << read_text(data.dir / "manifest.json");
  return kOk;
}

int cmd_train(RunConfig& rc, const Flags& f, std::ostream& out) {
  if (!f.method.empty()) rc.train["method"] = f.method;
  if (f.latent_levels) rc.train["latent_levels"] = *f.latent_levels;
  if (f.resolution_levels) rc.train["resolution_levels"] = *f.resolution_levels;
  if (f.base_channels) rc.train["base_channels"] = *f.base_channels;
  if (f.batch_size) rc.train["batch_size"] = *f.batch_size;
  if (f.max_steps) rc.train["max_steps"] = *f.max_steps;
  if (f.val_interval) rc.train["val_interval"] = *f.val_interval;
  if (!f.policy.empty()) rc.train["policy"] = f.policy;
  if (f.seed) rc.train["seed"] = *f.seed;
  if (!f.runs.empty()) rc.train["run"] = f.runs.front();

  const Dataset dataset = load_dataset(rc);
  const TrainSection section =
      train_section(rc, dataset.rows(), dataset.cols(), dataset.num_classes());
  const fs::path dir = section.config.checkpoint_dir;
  refuse_overwrite(dir / "best.ckpt", f.force);
  fs::create_directories(dir);
  write_text(dir / "train_config.json", to_json(section.config).dump(2) + "\n");

  const TrainResult result = train(section.config, dataset);
  out << "run " << section.run << ": best step " << result.best.step << ", validation loss "
      << format_number(result.best.val_loss) << "\n"
      << "checkpoint " << (dir / "best.ckpt").string() << "\n";
  return kOk;
}

int cmd_eval(RunConfig& rc, const Flags& f, std::ostream& out) {
  if (!f.runs.empty()) rc.eval["run"] = f.runs.front();
  if (f.samples) rc.eval["samples"] = *f.samples;
  if (f.save_cases) rc.eval["save_cases"] = *f.save_cases;
  if (!f.split.empty()) rc.eval["split"] = f.split;
  if (f.seed) rc.eval["seed"] = *f.seed;

  const EvalSection section = eval_section(rc);
  const Dataset dataset = load_dataset(rc);
  Checkpoint ckpt = load_run(rc, section.run);
  const fs::path dir = run_dir(rc, section.run) / "eval";
  refuse_overwrite(dir / "metrics.csv", f.force);
  fs::create_directories(dir / "samples");

  int saved = 0;
  const SampleSink sink = [&](const Case& c, const SampleSet& s) {
    if (saved >= section.save_cases) return;
    write_sample_set(dir / "samples" / sample_file_name(c.id), s);
    ++saved;
  };
  EvalConfig ec = section.config;
  ec.dataset = dataset.root().filename().string();
  const MetricsReport report = evaluate(ckpt.model, dataset, ec, sink);
  write_metrics_table(dir / "metrics.csv", report);
  out << "run " << section.run << ": " << report.cases.size() << " cases, " << report.num_samples
      << " samples, ged " << format_number(report.mean_ged) << ", sncc "
      << format_number(report.mean_sncc) << ", dice " << format_number(report.mean_dice) << "\n"
      << "table " << (dir / "metrics.csv").string() << "\n";
  return kOk;
}

int cmd_sample(RunConfig& rc, const Flags& f, std::ostream& out) {
  if (!f.runs.empty()) rc.sample["run"] = f.runs.front();
  if (f.n) rc.sample["n"] = *f.n;
  if (!f.case_ids.empty()) rc.sample["case"] = f.case_ids.front();
  if (f.seed) rc.sample["seed"] = *f.seed;

  const SampleSection section = sample_section(rc);
  const Dataset dataset = load_dataset(rc);
  std::string id = section.case_id;
  if (id.empty()) {
    const auto test = dataset.indices(Split::kTest);
    if (test.empty()) throw ContractError("dataset has no test cases; pass --case");
    id = dataset.cases()[test.front()].id;
  }
  const Case& c = dataset.find(id);
  Checkpoint ckpt = load_run(rc, section.run);
  if (ckpt.model->config().rows != c.rows || ckpt.model->config().cols != c.cols) {
    throw DimensionMismatch("checkpoint image size differs from case " + id);
  }
  const fs::path dir = run_dir(rc, section.run) / "samples" / id;
  refuse_overwrite(dir, f.force);
  if (fs::exists(dir)) fs::remove_all(dir);
  fs::create_directories(dir);

  const SampleSet set =
      draw_samples(ckpt.model, case_image_tensor(c), section.n, sample_seed(section.seed, id));
  const std::size_t plane = static_cast<std::size_t>(set.num_classes) * set.pixels();
  for (int i = 0; i < set.num_samples; ++i) {
    SampleSet one;
    one.num_samples = 1;
    one.rows = set.rows;
    one.cols = set.cols;
    one.num_classes = set.num_classes;
    one.seed = set.seed;
    one.probs.assign(set.probs.begin() + i * plane, set.probs.begin() + (i + 1) * plane);
    one.labels = {set.labels[i]};
    char name[32];
    std::snprintf(name, sizeof(name), "sample_%03d", i);
    write_sample_set(dir / (std::string(name) + ".pss"), one);
    write_png(dir / (std::string(name) + ".png"), render_labels(set.labels[i], 4));
  }
  out << "run " << section.run << ": wrote " << set.num_samples << " samples of " << id << " to "
      << dir.string() << "\n";
  return kOk;
}

int cmd_plot(RunConfig& rc, const Flags& f, std::ostream& out) {
  if (!f.runs.empty()) rc.plot["runs"] = f.runs;
  if (!f.case_ids.empty()) rc.plot["cases"] = f.case_ids;

  const PlotSection section = plot_section(rc);
  const Dataset dataset = load_dataset(rc);
  std::vector<std::string> cases = section.cases;
  if (cases.empty()) {
    const fs::path first = run_dir(rc, section.runs.front()) / "eval" / "samples";
    if (!fs::is_directory(first)) {
      throw IoError("no saved samples in " + first.string() + "; run eval first");
    }
    for (const auto& entry : fs::directory_iterator(first)) {
      if (entry.path().extension() == ".pss") cases.push_back(entry.path().stem().string());
    }
    std::sort(cases.begin(), cases.end());
    if (cases.empty()) throw IoError("no saved samples in " + first.string());
  }

  const fs::path dir = rc.root / "plots";
  fs::create_directories(dir);
  PanelLayout layout;
  layout.tile_scale = section.scale;
  layout.max_samples = section.max_samples;
  for (const std::string& id : cases) {
    std::vector<PanelRow> rows;
    for (const std::string& run : section.runs) {
      const fs::path file = run_dir(rc, run) / "eval" / "samples" / sample_file_name(id);
      if (!fs::exists(file)) {
        throw IoError("missing samples for case " + id + " in run " + run + " (" +
                      file.string() + ")");
      }
      rows.push_back({run, read_sample_set(file)});
    }
    const auto& all = dataset.cases();
    const auto it = std::find_if(all.begin(), all.end(), [&](const Case& c) { return c.id == id; });
    if (it == all.end()) throw IoError("case " + id + " is not in dataset " + dataset.root().string());
    const Case& c = *it;
    const fs::path png = dir / (id + ".png");
    refuse_overwrite(png, f.force);
    write_png(png, render_case_panel(c.image, c.rows, c.cols, c.annotations, rows, layout));
    out << png.string() << "\n";
  }
  return kOk;
}

}  // namespace

int run(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
  Flags f;
  CLI::App app{"Hierarchical probabilistic segmentation toolkit", "phiseg"};
  app.fallthrough();
  app.require_subcommand(1);
  app.add_option("--config", f.config, "JSON run config");
  app.add_option("--seed", f.seed, "Seed for the command's random stream");
  app.add_flag("--force", f.force, "Overwrite existing outputs");
  app.add_option("--out", f.out, "Output root (default: $PHISEG_RUN_ROOT or ./runs)");

  auto* make_data = app.add_subcommand("make-data", "Generate the synthetic dataset");
  make_data->add_option("--data-dir", f.data_dir, "Dataset directory (relative to the root)");
  make_data->add_option("--cases", f.cases, "Number of cases");

  auto* train_cmd = app.add_subcommand("train", "Train one model");
  train_cmd->add_option("--method", f.method, "phiseg | deterministic");
  train_cmd->add_option("--latent-levels", f.latent_levels, "L");
  train_cmd->add_option("--resolution-levels", f.resolution_levels, "R");
  train_cmd->add_option("--base-channels", f.base_channels, "Channels at full resolution");
  train_cmd->add_option("--batch-size", f.batch_size, "Batch size");
  train_cmd->add_option("--max-steps", f.max_steps, "Optimiser steps");
  train_cmd->add_option("--val-interval", f.val_interval, "Steps between validations");
  train_cmd->add_option("--policy", f.policy, "random | fixed:<m>");
  train_cmd->add_option("--run", f.runs, "Run name")->expected(1);

  auto* eval_cmd = app.add_subcommand("eval", "Evaluate a trained run");
  eval_cmd->add_option("--run", f.runs, "Run name")->expected(1);
  eval_cmd->add_option("--samples", f.samples, "Samples per case");
  eval_cmd->add_option("--split", f.split, "train | val | test");
  eval_cmd->add_option("--save-cases", f.save_cases, "Sample sets kept for plotting");

  auto* sample_cmd = app.add_subcommand("sample", "Draw and store samples for one case");
  sample_cmd->add_option("--run", f.runs, "Run name")->expected(1);
  sample_cmd->add_option("--n", f.n, "Number of samples");
  sample_cmd->add_option("--case", f.case_ids, "Case id")->expected(1);

  auto* plot_cmd = app.add_subcommand("plot", "Render comparison panels");
  plot_cmd->add_option("--run", f.runs, "Run names, one row each");
  plot_cmd->add_option("--case", f.case_ids, "Case ids (default: all saved)");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    std::ostringstream cli_out, cli_err;
    const int code = app.exit(e, cli_out, cli_err);
    out << cli_out.str();
    err << cli_err.str();
    return code == 0 ? kOk : kConfigError;
  }

  try {
    configure_determinism();
    RunConfig rc = load_run_config(f.config, f.out);
    if (make_data->parsed()) return cmd_make_data(rc, f, out);
    if (train_cmd->parsed()) return cmd_train(rc, f, out);
    if (eval_cmd->parsed()) return cmd_eval(rc, f, out);
    if (sample_cmd->parsed()) return cmd_sample(rc, f, out);
    return cmd_plot(rc, f, out);
  } catch (const ConfigError& e) {
    err << "phiseg: config error: " << e.what() << "\n";
    return kConfigError;
  } catch (const ContractError& e) {
    err << "phiseg: invalid argument: " << e.what() << "\n";
    return kConfigError;
  } catch (const IoError& e) {
    err << "phiseg: I/O error: " << e.what() << "\n";
    return kIoError;
  } catch (const fs::filesystem_error& e) {
    err << "phiseg: I/O error: " << e.what() << "\n";
    return kIoError;
  } catch (const DimensionMismatch& e) {
    err << "phiseg: dimension mismatch: " << e.what() << "\n";
    return kDimensionMismatch;
  } catch (const DivergenceError& e) {
    err << "phiseg: training diverged at step " << e.step() << ": " << e.what() << "\n";
    return kDiverged;
  } catch (const std::exception& e) {
    err << "phiseg: error: " << e.what() << "\n";
    return kUnexpected;
  }
}

}  // namespace phiseg::cli
