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

#include <cstdlib>
#include <fstream>
#include <set>
#include <sstream>

#include "phiseg/cli.hpp"
#include "phiseg/errors.hpp"

namespace phiseg::cli {

namespace {

using json = nlohmann::json;

struct Location {
  std::size_t line = 1;
  std::size_t col = 1;
};

Location location_of(const std::string& text, std::size_t offset) {
  Location loc;
  for (std::size_t i = 0; i < offset && i < text.size(); ++i) {
    if (text[i] == '\n') {
      ++loc.line;
      loc.col = 1;
    } else {
      ++loc.col;
    }
  }
  return loc;
}

std::string where(const RunConfig& rc, std::size_t offset) {
  const std::string name = rc.source.empty() ? "<flags>" : rc.source.string();
  if (rc.text.empty()) return name + ": ";
  const Location loc = location_of(rc.text, offset);
  return name + ":" + std::to_string(loc.line) + ":" + std::to_string(loc.col) + ": ";
}

// Offset of `"key"` inside `"section"`, or of the section itself.
std::size_t key_offset(const RunConfig& rc, const std::string& section, const std::string& key) {
  const std::size_t s = rc.text.find("\"" + section + "\"");
  if (s == std::string::npos) return 0;
  if (key.empty()) return s;
  const std::size_t k = rc.text.find("\"" + key + "\"", s);
  return k == std::string::npos ? s : k;
}

[[noreturn]] void fail(const RunConfig& rc, const std::string& section, const std::string& key,
                       const std::string& msg) {
  const std::string label = key.empty() ? section : section + "." + key;
  throw ConfigError(where(rc, key_offset(rc, section, key)) + label + ": " + msg);
}

void check_keys(const RunConfig& rc, const std::string& section, const json& j,
                const std::set<std::string>& allowed) {
  if (!j.is_object()) fail(rc, section, "", "section must be a JSON object");
  for (const auto& [key, value] : j.items()) {
    if (!allowed.count(key)) fail(rc, section, key, "unknown key");
  }
}

// j[key] converted to T, or `fallback` if absent; type errors are reported
// against the key's location.
template <typename T>
T get(const RunConfig& rc, const std::string& section, const json& j, const std::string& key,
      const T& fallback) {
  if (!j.contains(key)) return fallback;
  try {
    return j.at(key).get<T>();
  } catch (const json::exception& e) {
    fail(rc, section, key, std::string("wrong type (") + e.what() + ")");
  }
}

std::filesystem::path resolve(const RunConfig& rc, const std::filesystem::path& p) {
  return p.is_absolute() ? p : rc.root / p;
}

const std::set<std::string> kSynthKeys = {
    "num_cases",       "rows",         "cols",         "num_classes",
    "annotators",      "threshold_step", "noise_amplitude", "blur_scale",
    "shape_jitter",    "annotator_jitter", "split_ratios", "seed"};

}  // namespace

RunConfig load_run_config(const std::filesystem::path& file,
                          const std::filesystem::path& out_override) {
  RunConfig rc;
  json top = json::object();
  if (!file.empty()) {
    std::ifstream in(file);
    if (!in) throw IoError("cannot read config file " + file.string());
    std::stringstream buf;
    buf << in.rdbuf();
    rc.source = file;
    rc.text = buf.str();
    try {
      top = json::parse(rc.text);
    } catch (const json::parse_error& e) {
      const std::size_t offset = e.byte > 0 ? e.byte - 1 : 0;
      throw ConfigError(where(rc, offset) + "malformed JSON: " + e.what());
    }
    if (!top.is_object()) throw ConfigError(where(rc, 0) + "config must be a JSON object");
  }

  for (const auto& [key, value] : top.items()) {
    if (key == "data") {
      rc.data = value;
    } else if (key == "train") {
      rc.train = value;
    } else if (key == "eval") {
      rc.eval = value;
    } else if (key == "sample") {
      rc.sample = value;
    } else if (key == "plot") {
      rc.plot = value;
    } else if (key != "root") {
      throw ConfigError(where(rc, key_offset(rc, key, "")) + "unknown top-level key '" + key + "'");
    }
  }

  if (!out_override.empty()) {
    rc.root = out_override;
  } else if (top.contains("root")) {
    if (!top["root"].is_string()) {
      throw ConfigError(where(rc, key_offset(rc, "root", "")) + "root must be a string");
    }
    const std::filesystem::path r = top["root"].get<std::string>();
    rc.root = r.is_absolute() ? r : file.parent_path() / r;
  } else if (const char* env = std::getenv("PHISEG_RUN_ROOT"); env && *env) {
    rc.root = env;
  } else {
    rc.root = "runs";
  }
  rc.root = std::filesystem::absolute(rc.root).lexically_normal();
  return rc;
}

DataSection data_section(const RunConfig& rc) {
  std::set<std::string> allowed = kSynthKeys;
  allowed.insert("dir");
  check_keys(rc, "data", rc.data, allowed);
  DataSection out;
  out.dir = resolve(rc, get<std::string>(rc, "data", rc.data, "dir", "data"));
  json spec = rc.data;
  spec.erase("dir");
  try {
    out.spec = synth_spec_from_json(spec);
  } catch (const ConfigError& e) {
    fail(rc, "data", "", e.what());
  } catch (const json::exception& e) {
    fail(rc, "data", "", e.what());
  }
  return out;
}

std::string default_run_name(const RunConfig& rc) {
  const json& t = rc.train;
  if (t.is_object() && t.contains("run")) return get<std::string>(rc, "train", t, "run", "");
  const std::string method = get<std::string>(rc, "train", t, "method", "phiseg");
  if (method == "deterministic") return "det";
  return "phiseg_L" + std::to_string(get<int>(rc, "train", t, "latent_levels", 5));
}

TrainSection train_section(const RunConfig& rc, int rows, int cols, int num_classes) {
  const json& t = rc.train;
  check_keys(rc, "train", t,
             {"run", "method", "latent_levels", "resolution_levels", "latent_channels",
              "base_channels", "activation", "learning_rate", "batch_size", "max_steps",
              "val_interval", "policy", "seed", "elbo_only_validation"});
  TrainSection out;
  out.run = default_run_name(rc);
  if (out.run.empty() || out.run.find('/') != std::string::npos) {
    fail(rc, "train", "run", "run name must be a non-empty directory name");
  }
  const std::string method = get<std::string>(rc, "train", t, "method", "phiseg");
  if (method != "phiseg" && method != "deterministic") {
    fail(rc, "train", "method", "must be 'phiseg' or 'deterministic'");
  }
  TrainConfig& c = out.config;
  try {
    c.model = make_model_config(get<int>(rc, "train", t, "latent_levels", 5),
                                get<int>(rc, "train", t, "resolution_levels", 6), rows, cols,
                                get<int>(rc, "train", t, "base_channels", 8),
                                get<int>(rc, "train", t, "latent_channels", 2), num_classes);
    c.model.deterministic = method == "deterministic";
    c.model.activation =
        activation_from_string(get<std::string>(rc, "train", t, "activation", "relu"));
    c.model.validate();
    c.learning_rate = get<double>(rc, "train", t, "learning_rate", 1e-3);
    c.batch_size = get<int>(rc, "train", t, "batch_size", 8);
    c.max_steps = get<long>(rc, "train", t, "max_steps", 5000);
    c.val_interval = get<long>(rc, "train", t, "val_interval", 250);
    c.policy = AnnotatorPolicy::parse(get<std::string>(rc, "train", t, "policy", "random"));
    c.seed = get<std::uint64_t>(rc, "train", t, "seed", 1);
    c.elbo_only_validation = get<bool>(rc, "train", t, "elbo_only_validation", false);
    c.checkpoint_dir = run_dir(rc, out.run);
    c.validate();
  } catch (const ConfigError& e) {
    fail(rc, "train", "", e.what());
  }
  return out;
}

EvalSection eval_section(const RunConfig& rc) {
  const json& e = rc.eval;
  check_keys(rc, "eval", e,
             {"run", "samples", "split", "annotators", "reference_annotator", "classes",
              "estimator", "seed", "save_cases"});
  EvalSection out;
  out.run = get<std::string>(rc, "eval", e, "run", default_run_name(rc));
  EvalConfig& c = out.config;
  c.num_samples = get<int>(rc, "eval", e, "samples", 100);
  if (c.num_samples < 1) fail(rc, "eval", "samples", "must be >= 1");
  try {
    c.split = split_from_string(get<std::string>(rc, "eval", e, "split", "test"));
  } catch (const std::exception& ex) {
    fail(rc, "eval", "split", ex.what());
  }
  c.annotators = get<std::vector<int>>(rc, "eval", e, "annotators", {});
  c.reference_annotator = get<int>(rc, "eval", e, "reference_annotator", 0);
  c.classes = get<std::vector<int>>(rc, "eval", e, "classes", {});
  const std::string est = get<std::string>(rc, "eval", e, "estimator", "biased");
  if (est == "biased") {
    c.estimator = GedEstimator::kBiased;
  } else if (est == "unbiased") {
    c.estimator = GedEstimator::kUnbiased;
  } else {
    fail(rc, "eval", "estimator", "must be 'biased' or 'unbiased'");
  }
  c.seed = get<std::uint64_t>(rc, "eval", e, "seed", 7);
  c.method = out.run;
  out.save_cases = get<int>(rc, "eval", e, "save_cases", 4);
  if (out.save_cases < 0) fail(rc, "eval", "save_cases", "must be >= 0");
  return out;
}

SampleSection sample_section(const RunConfig& rc) {
  const json& s = rc.sample;
  check_keys(rc, "sample", s, {"run", "case", "n", "seed"});
  SampleSection out;
  out.run = get<std::string>(rc, "sample", s, "run", default_run_name(rc));
  out.case_id = get<std::string>(rc, "sample", s, "case", "");
  out.n = get<int>(rc, "sample", s, "n", 8);
  if (out.n < 1) fail(rc, "sample", "n", "must be >= 1");
  out.seed = get<std::uint64_t>(rc, "sample", s, "seed", 11);
  return out;
}

PlotSection plot_section(const RunConfig& rc) {
  const json& p = rc.plot;
  check_keys(rc, "plot", p, {"runs", "cases", "max_samples", "scale"});
  PlotSection out;
  out.runs = get<std::vector<std::string>>(rc, "plot", p, "runs", {default_run_name(rc)});
  if (out.runs.empty()) fail(rc, "plot", "runs", "at least one run is required");
  out.cases = get<std::vector<std::string>>(rc, "plot", p, "cases", {});
  out.max_samples = get<int>(rc, "plot", p, "max_samples", 6);
  if (out.max_samples < 1) fail(rc, "plot", "max_samples", "must be >= 1");
  out.scale = get<int>(rc, "plot", p, "scale", 2);
  if (out.scale < 1) fail(rc, "plot", "scale", "must be >= 1");
  return out;
}

std::filesystem::path run_dir(const RunConfig& rc, const std::string& run) {
  return rc.root / run;
}

}  // namespace phiseg::cli
