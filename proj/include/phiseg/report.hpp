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

#include <filesystem>
#include <string>
#include <vector>

namespace phiseg {

struct CaseMetrics {
  std::string case_id;
  double ged = 0.0;
  double sncc = 0.0;
  double dice = 0.0;
};

struct MetricsReport {
  std::string method;
  std::string dataset;
  int num_samples = 0;
  std::vector<CaseMetrics> cases;
  double mean_ged = 0.0;
  double mean_sncc = 0.0;
  double mean_dice = 0.0;

  // Recomputes the aggregate means from `cases`.
  void finalize();
};

// Per-case table with header `case_id,ged,sncc,dice`, a blank line, then a
// `# summary` block with one aggregate row.
std::string format_metrics_table(const MetricsReport& report);
void write_metrics_table(const std::filesystem::path& path, const MetricsReport& report);
MetricsReport read_metrics_table(const std::filesystem::path& path);

// Fixed-precision formatting used by every table the toolkit writes.
std::string format_number(double value);

}  // namespace phiseg
