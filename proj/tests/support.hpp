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

#include <unistd.h>

#include <filesystem>
#include <random>
#include <string>
#include <vector>

#include "phiseg/grid.hpp"

namespace phiseg::testing {

// Fresh, empty scratch directory removed on destruction.
class ScratchDir {
 public:
  explicit ScratchDir(const std::string& tag)
      : path_(std::filesystem::temp_directory_path() /
              ("phiseg_" + tag + "_" + std::to_string(::getpid()))) {
    std::filesystem::remove_all(path_);
    std::filesystem::create_directories(path_);
  }
  ~ScratchDir() {
    std::error_code ec;
    std::filesystem::remove_all(path_, ec);
  }
  ScratchDir(const ScratchDir&) = delete;
  ScratchDir& operator=(const ScratchDir&) = delete;

  const std::filesystem::path& path() const { return path_; }
  std::filesystem::path operator/(const std::string& name) const { return path_ / name; }

 private:
  std::filesystem::path path_;
};

inline LabelMap random_mask(std::mt19937_64& rng, int rows, int cols, int num_classes,
                            double fill = 0.4) {
  LabelMap m(rows, cols);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  std::uniform_int_distribution<int> cls(1, num_classes - 1);
  for (auto& v : m.values) v = u(rng) < fill ? static_cast<std::uint8_t>(cls(rng)) : 0;
  return m;
}

inline RealGrid random_grid(std::mt19937_64& rng, int rows, int cols) {
  RealGrid g(rows, cols);
  std::normal_distribution<double> n(0.0, 1.0);
  for (auto& v : g.values) v = n(rng);
  return g;
}

}  // namespace phiseg::testing
