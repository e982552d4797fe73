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
#include <iosfwd>
#include <string>
#include <vector>

#include "json.hpp"
#include "phiseg/data.hpp"
#include "phiseg/train.hpp"

namespace phiseg::cli {

enum ExitCode : int {
  kOk = 0,
  kUnexpected = 1,
  kConfigError = 2,
  kIoError = 3,
  kDimensionMismatch = 4,
  kDiverged = 5,
};

// Parsed config file. Each section stays raw JSON until a command asks for
// it, so command-line overrides can be merged in first and validated once.
struct RunConfig {
  std::filesystem::path source;  // empty when no file was given
  std::string text;              // file contents, for line-numbered diagnostics
  std::filesystem::path root;    // output root; every relative path hangs off it
  nlohmann::json data = nlohmann::json::object();
  nlohmann::json train = nlohmann::json::object();
  nlohmann::json eval = nlohmann::json::object();
  nlohmann::json sample = nlohmann::json::object();
  nlohmann::json plot = nlohmann::json::object();
};

// Reads `file` (may be empty for all defaults). The output root is taken,
// in order, from `out_override`, the file's "root" key (relative to the
// file), the PHISEG_RUN_ROOT environment variable, and finally "runs".
// Throws ConfigError with a "<file>:<line>:<col>:" prefix.
RunConfig load_run_config(const std::filesystem::path& file,
                          const std::filesystem::path& out_override = {});

struct DataSection {
  std::filesystem::path dir;
  SynthSpec spec;
};

struct TrainSection {
  std::string run;
  TrainConfig config;  // checkpoint_dir already resolved
};

struct EvalSection {
  std::string run;
  EvalConfig config;
  int save_cases = 4;  // sample sets kept for the first test cases (for plot)
};

struct SampleSection {
  std::string run;
  std::string case_id;  // empty: first test case
  int n = 8;
  std::uint64_t seed = 11;
};

struct PlotSection {
  std::vector<std::string> runs;
  std::vector<std::string> cases;  // empty: every case the first run saved
  int max_samples = 6;
  int scale = 2;
};

DataSection data_section(const RunConfig& rc);
// Image size and class count come from the dataset being trained on.
TrainSection train_section(const RunConfig& rc, int rows, int cols, int num_classes);
std::string default_run_name(const RunConfig& rc);
EvalSection eval_section(const RunConfig& rc);
SampleSection sample_section(const RunConfig& rc);
PlotSection plot_section(const RunConfig& rc);

std::filesystem::path run_dir(const RunConfig& rc, const std::string& run);

// `phiseg make-data|train|eval|sample|plot`. Returns the process exit code;
// data goes to files, the summary to `out`, diagnostics to `err`.
int run(int argc, const char* const* argv, std::ostream& out, std::ostream& err);

}  // namespace phiseg::cli
