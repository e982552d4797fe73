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

#include "phiseg/grid.hpp"

#include <algorithm>
#include <string>

#include "phiseg/errors.hpp"

namespace phiseg {

LabelMap::LabelMap(int rows, int cols, std::uint8_t fill)
    : rows(rows), cols(cols), values(static_cast<std::size_t>(rows) * cols, fill) {}

std::size_t LabelMap::count(std::uint8_t label) const {
  return static_cast<std::size_t>(std::count(values.begin(), values.end(), label));
}

void LabelMap::validate(int num_classes) const {
  if (rows <= 0 || cols <= 0 || values.size() != static_cast<std::size_t>(rows) * cols) {
    throw ContractError("label map buffer does not match its shape");
  }
  for (std::uint8_t v : values) {
    if (v >= num_classes) {
      throw ContractError("label " + std::to_string(v) + " outside [0, " +
                          std::to_string(num_classes) + ")");
    }
  }
}

RealGrid::RealGrid(int rows, int cols, double fill)
    : rows(rows), cols(cols), values(static_cast<std::size_t>(rows) * cols, fill) {}

}  // namespace phiseg
