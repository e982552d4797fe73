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

#include "phiseg/report.hpp"

#include <cstdio>
#include <fstream>
#include <sstream>

#include "phiseg/errors.hpp"

namespace phiseg {

void MetricsReport::finalize() {
  mean_ged = mean_sncc = mean_dice = 0.0;
  if (cases.empty()) return;
  for (const CaseMetrics& c : cases) {
    mean_ged += c.ged;
    mean_sncc += c.sncc;
    mean_dice += c.dice;
  }
  const double n = static_cast<double>(cases.size());
  mean_ged /= n;
  mean_sncc /= n;
  mean_dice /= n;
}

std::string format_number(double value) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%.10f", value);
  return buf;
}

std::string format_metrics_table(const MetricsReport& report) {
  std::ostringstream out;
  out << "case_id,ged,sncc,dice\n";
  for (const CaseMetrics& c : report.cases) {
    out << c.case_id << ',' << format_number(c.ged) << ',' << format_number(c.sncc) << ','
        << format_number(c.dice) << '\n';
  }
  out << "\n# summary\n";
  out << "method,dataset,samples,cases,ged,sncc,dice\n";
  out << report.method << ',' << report.dataset << ',' << report.num_samples << ','
      << report.cases.size() << ',' << format_number(report.mean_ged) << ','
      << format_number(report.mean_sncc) << ',' << format_number(report.mean_dice) << '\n';
  return out.str();
}

void write_metrics_table(const std::filesystem::path& path, const MetricsReport& report) {
  std::ofstream out(path, std::ios::trunc);
  if (!out) throw IoError("cannot write metrics table " + path.string());
  out << format_metrics_table(report);
  if (!out) throw IoError("failed writing metrics table " + path.string());
}

MetricsReport read_metrics_table(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open metrics table " + path.string());
  MetricsReport report;
  std::string line;
  if (!std::getline(in, line) || line != "case_id,ged,sncc,dice") {
    throw IoError(path.string() + ": unexpected metrics table header");
  }
  const auto split = [](const std::string& s) {
    std::vector<std::string> fields;
    std::stringstream ss(s);
    std::string f;
    while (std::getline(ss, f, ',')) fields.push_back(f);
    return fields;
  };
  while (std::getline(in, line) && !line.empty()) {
    const auto f = split(line);
    if (f.size() != 4) throw IoError(path.string() + ": malformed row '" + line + "'");
    report.cases.push_back({f[0], std::stod(f[1]), std::stod(f[2]), std::stod(f[3])});
  }
  while (std::getline(in, line)) {
    if (line.empty() || line[0] == '#' || line.rfind("method,", 0) == 0) continue;
    const auto f = split(line);
    if (f.size() == 7) {
      report.method = f[0];
      report.dataset = f[1];
      report.num_samples = std::stoi(f[2]);
    }
  }
  report.finalize();
  return report;
}

}  // namespace phiseg
