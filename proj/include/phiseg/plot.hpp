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
#include <string>
#include <vector>

#include "phiseg/grid.hpp"
#include "phiseg/samples.hpp"

namespace phiseg {

struct RgbImage {
  int width = 0;
  int height = 0;
  std::vector<std::uint8_t> pixels;  // RGB, row-major

  RgbImage() = default;
  RgbImage(int width, int height, std::uint8_t fill = 255);

  void set(int x, int y, std::uint8_t r, std::uint8_t g, std::uint8_t b);
  const std::uint8_t* at(int x, int y) const { return &pixels[(static_cast<std::size_t>(y) * width + x) * 3]; }
};

void write_png(const std::filesystem::path& path, const RgbImage& image);

struct PanelRow {
  std::string method;
  SampleSet samples;
};

struct PanelLayout {
  int tile_scale = 2;  // pixel replication per tile pixel
  int gap = 2;
  int max_samples = 6;
};

// One figure per case. First row: input image, then the annotations. Each
// following row belongs to one method: the annotator-averaged cross-entropy
// error map, the first `max_samples` samples, and the gamma map last.
RgbImage render_case_panel(const std::vector<float>& image, int rows, int cols,
                           const std::vector<LabelMap>& annotations,
                           const std::vector<PanelRow>& methods, const PanelLayout& layout = {});

// Tile column index of the error map, first sample and gamma map for a row
// of `shown` samples.
struct PanelColumns {
  int error_map;
  int first_sample;
  int gamma_map;
};
PanelColumns panel_columns(int shown_tiles);

// Label map coloured per class, drawn over nothing (for per-sample files).
RgbImage render_labels(const LabelMap& labels, int scale = 1);

}  // namespace phiseg
