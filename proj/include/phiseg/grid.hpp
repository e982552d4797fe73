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

#include <cstddef>
#include <cstdint>
#include <span>
#include <vector>

namespace phiseg {

// Hard segmentation, row-major, one class index per pixel.
struct LabelMap {
  int rows = 0;
  int cols = 0;
  std::vector<std::uint8_t> values;

  LabelMap() = default;
  LabelMap(int rows, int cols, std::uint8_t fill = 0);

  std::size_t size() const { return values.size(); }
  std::uint8_t& at(int r, int c) { return values[static_cast<std::size_t>(r) * cols + c]; }
  std::uint8_t at(int r, int c) const { return values[static_cast<std::size_t>(r) * cols + c]; }
  bool same_shape(const LabelMap& other) const { return rows == other.rows && cols == other.cols; }
  std::size_t count(std::uint8_t label) const;

  // Throws ContractError when an entry is >= num_classes or the buffer size is off.
  void validate(int num_classes) const;

  friend bool operator==(const LabelMap&, const LabelMap&) = default;
};

// Real-valued single-channel map (error maps, gamma maps).
struct RealGrid {
  int rows = 0;
  int cols = 0;
  std::vector<double> values;

  RealGrid() = default;
  RealGrid(int rows, int cols, double fill = 0.0);

  std::size_t size() const { return values.size(); }
  double& at(int r, int c) { return values[static_cast<std::size_t>(r) * cols + c]; }
  double at(int r, int c) const { return values[static_cast<std::size_t>(r) * cols + c]; }
  bool same_shape(const RealGrid& other) const { return rows == other.rows && cols == other.cols; }
};

}  // namespace phiseg
