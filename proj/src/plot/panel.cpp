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

#include <algorithm>
#include <array>
#include <cmath>

#include "phiseg/errors.hpp"
#include "phiseg/metrics.hpp"
#include "phiseg/plot.hpp"

namespace phiseg {

namespace {

using Color = std::array<std::uint8_t, 3>;

Color class_color(int k) {
  static constexpr Color kPalette[] = {
      {0, 0, 0}, {230, 80, 40}, {60, 160, 230}, {250, 210, 60}, {120, 200, 90}, {200, 90, 200},
  };
  return kPalette[k % 6];
}

// Black-red-yellow-white ramp for non-negative maps.
Color heat(double t) {
  t = std::clamp(t, 0.0, 1.0);
  const auto ch = [](double v) { return static_cast<std::uint8_t>(std::lround(255.0 * std::clamp(v, 0.0, 1.0))); };
  return {ch(3.0 * t), ch(3.0 * t - 1.0), ch(3.0 * t - 2.0)};
}

class Canvas {
 public:
  Canvas(RgbImage& img, int rows, int cols, const PanelLayout& layout)
      : img_(img), rows_(rows), cols_(cols), layout_(layout) {}

  template <typename ColorAt>
  void tile(int row, int col, ColorAt color_at) {
    const int s = layout_.tile_scale;
    const int x0 = layout_.gap + col * (cols_ * s + layout_.gap);
    const int y0 = layout_.gap + row * (rows_ * s + layout_.gap);
    for (int r = 0; r < rows_; ++r) {
      for (int c = 0; c < cols_; ++c) {
        const Color px = color_at(static_cast<std::size_t>(r) * cols_ + c);
        for (int dy = 0; dy < s; ++dy) {
          for (int dx = 0; dx < s; ++dx) img_.set(x0 + c * s + dx, y0 + r * s + dy, px[0], px[1], px[2]);
        }
      }
    }
  }

 private:
  RgbImage& img_;
  int rows_, cols_;
  const PanelLayout& layout_;
};

}  // namespace

PanelColumns panel_columns(int shown_tiles) { return {0, 1, shown_tiles + 1}; }

RgbImage render_labels(const LabelMap& labels, int scale) {
  RgbImage img(labels.cols * scale, labels.rows * scale);
  for (int r = 0; r < labels.rows; ++r) {
    for (int c = 0; c < labels.cols; ++c) {
      const Color px = class_color(labels.at(r, c));
      for (int dy = 0; dy < scale; ++dy) {
        for (int dx = 0; dx < scale; ++dx) img.set(c * scale + dx, r * scale + dy, px[0], px[1], px[2]);
      }
    }
  }
  return img;
}

RgbImage render_case_panel(const std::vector<float>& image, int rows, int cols,
                           const std::vector<LabelMap>& annotations,
                           const std::vector<PanelRow>& methods, const PanelLayout& layout) {
  const std::size_t plane = static_cast<std::size_t>(rows) * cols;
  if (image.size() != plane) throw ContractError("panel: image size mismatch");
  int shown = static_cast<int>(annotations.size());
  for (const PanelRow& m : methods) {
    if (m.samples.rows != rows || m.samples.cols != cols) {
      throw ContractError("panel: sample set for " + m.method + " has wrong shape");
    }
    shown = std::max(shown, std::min(layout.max_samples, m.samples.num_samples));
  }
  const PanelColumns cols_idx = panel_columns(shown);
  const int n_cols = shown + 2;
  const int n_rows = 1 + static_cast<int>(methods.size());
  RgbImage img(layout.gap + n_cols * (cols * layout.tile_scale + layout.gap),
               layout.gap + n_rows * (rows * layout.tile_scale + layout.gap));
  Canvas canvas(img, rows, cols, layout);

  const auto [lo, hi] = std::minmax_element(image.begin(), image.end());
  const double span = std::max(1e-12, static_cast<double>(*hi - *lo));
  const auto gray = [&](std::size_t i) {
    return static_cast<std::uint8_t>(std::lround(255.0 * (image[i] - *lo) / span));
  };
  canvas.tile(0, cols_idx.error_map, [&](std::size_t i) {
    const auto g = gray(i);
    return Color{g, g, g};
  });
  for (std::size_t m = 0; m < annotations.size(); ++m) {
    const LabelMap& a = annotations[m];
    canvas.tile(0, cols_idx.first_sample + static_cast<int>(m), [&](std::size_t i) {
      return a.values[i] == 0 ? Color{static_cast<std::uint8_t>(gray(i) / 3), static_cast<std::uint8_t>(gray(i) / 3), static_cast<std::uint8_t>(gray(i) / 3)}
                              : class_color(a.values[i]);
    });
  }

  for (std::size_t row = 0; row < methods.size(); ++row) {
    const SampleSet& ss = methods[row].samples;
    RealGrid error(rows, cols);
    for (const LabelMap& y : annotations) {
      const RealGrid e = ce_error_map(ss, y);
      for (std::size_t i = 0; i < plane; ++i) error.values[i] += e.values[i];
    }
    if (!annotations.empty()) {
      for (double& v : error.values) v /= static_cast<double>(annotations.size());
    }
    const RealGrid gamma = gamma_map(ss);
    double top = 1e-12;
    for (std::size_t i = 0; i < plane; ++i) top = std::max({top, error.values[i], gamma.values[i]});

    const int r = static_cast<int>(row) + 1;
    canvas.tile(r, cols_idx.error_map, [&](std::size_t i) { return heat(error.values[i] / top); });
    const int n_show = std::min(shown, ss.num_samples);
    for (int n = 0; n < n_show; ++n) {
      const LabelMap& lm = ss.labels[n];
      canvas.tile(r, cols_idx.first_sample + n, [&](std::size_t i) { return class_color(lm.values[i]); });
    }
    canvas.tile(r, cols_idx.gamma_map, [&](std::size_t i) { return heat(gamma.values[i] / top); });
  }
  return img;
}

}  // namespace phiseg
