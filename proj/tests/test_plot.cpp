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

#include <gtest/gtest.h>

#include <fstream>
#include <iterator>
#include <random>

#include "phiseg/errors.hpp"
#include "phiseg/plot.hpp"
#include "support.hpp"

namespace phiseg {
namespace {

using testing::random_mask;

constexpr int kRows = 6, kCols = 5;

std::vector<std::uint8_t> tile_pixels(const RgbImage& img, const PanelLayout& layout, int row, int col) {
  const int s = layout.tile_scale;
  const int x0 = layout.gap + col * (kCols * s + layout.gap);
  const int y0 = layout.gap + row * (kRows * s + layout.gap);
  std::vector<std::uint8_t> out;
  for (int y = 0; y < kRows * s; ++y) {
    for (int x = 0; x < kCols * s; ++x) out.insert(out.end(), img.at(x0 + x, y0 + y), img.at(x0 + x, y0 + y) + 3);
  }
  return out;
}

std::vector<float> ramp_image() {
  std::vector<float> img(kRows * kCols);
  for (std::size_t i = 0; i < img.size(); ++i) img[i] = static_cast<float>(i);
  return img;
}

TEST(Panel, ErrorMapFirstGammaMapLast) {
  const PanelColumns c = panel_columns(6);
  EXPECT_EQ(c.error_map, 0);
  EXPECT_EQ(c.first_sample, 1);
  EXPECT_EQ(c.gamma_map, 7);
}

TEST(Panel, DimensionsFollowTileGrid) {
  std::mt19937_64 rng(1);
  std::vector<LabelMap> ann;
  for (int i = 0; i < 4; ++i) ann.push_back(random_mask(rng, kRows, kCols, 2));
  std::vector<LabelMap> samples;
  for (int i = 0; i < 9; ++i) samples.push_back(random_mask(rng, kRows, kCols, 2));
  const PanelLayout layout;
  const RgbImage img = render_case_panel(ramp_image(), kRows, kCols, ann,
                                         {{"a", sample_set_from_labels(samples, 2)}}, layout);
  // max_samples = 6 tiles between the two map columns, two rows.
  EXPECT_EQ(img.width, layout.gap + 8 * (kCols * layout.tile_scale + layout.gap));
  EXPECT_EQ(img.height, layout.gap + 2 * (kRows * layout.tile_scale + layout.gap));
}

TEST(Panel, DeterministicRowShowsIdenticalTilesAndBlankGamma) {
  std::mt19937_64 rng(2);
  std::vector<LabelMap> ann;
  for (int i = 0; i < 3; ++i) ann.push_back(random_mask(rng, kRows, kCols, 2));
  const LabelMap fixed = random_mask(rng, kRows, kCols, 2);
  const PanelLayout layout;
  const RgbImage img = render_case_panel(ramp_image(), kRows, kCols, ann,
                                         {{"det", sample_set_from_labels({fixed, fixed, fixed, fixed}, 2)}},
                                         layout);
  const PanelColumns c = panel_columns(4);
  const auto first = tile_pixels(img, layout, 1, c.first_sample);
  for (int n = 1; n < 4; ++n) EXPECT_EQ(tile_pixels(img, layout, 1, c.first_sample + n), first);
  for (std::uint8_t v : tile_pixels(img, layout, 1, c.gamma_map)) EXPECT_EQ(v, 0);
}

TEST(Panel, AnnotationRowAlignsWithSampleColumns) {
  std::mt19937_64 rng(3);
  const LabelMap a = random_mask(rng, kRows, kCols, 2, 1.0);  // all foreground
  const PanelLayout layout;
  const RgbImage img =
      render_case_panel(ramp_image(), kRows, kCols, {a}, {{"m", sample_set_from_labels({a}, 2)}}, layout);
  const PanelColumns c = panel_columns(1);
  EXPECT_EQ(tile_pixels(img, layout, 0, c.first_sample), tile_pixels(img, layout, 1, c.first_sample));
}

TEST(Panel, ShapeMismatchRejected) {
  const LabelMap a(kRows, kCols, 0);
  EXPECT_THROW(render_case_panel(std::vector<float>(3), kRows, kCols, {a}, {}), ContractError);
  const LabelMap other(kRows + 2, kCols, 0);
  EXPECT_THROW(render_case_panel(ramp_image(), kRows, kCols, {a}, {{"m", sample_set_from_labels({other}, 2)}}),
               ContractError);
}

TEST(Png, FileStartsWithSignatureAndIsDeterministic) {
  testing::ScratchDir dir("png");
  RgbImage img(7, 3, 10);
  img.set(2, 1, 255, 0, 0);
  write_png(dir / "a.png", img);
  write_png(dir / "b.png", img);
  const auto read = [](const std::filesystem::path& p) {
    std::ifstream in(p, std::ios::binary);
    return std::string(std::istreambuf_iterator<char>(in), {});
  };
  const std::string a = read(dir / "a.png");
  ASSERT_GT(a.size(), 8u);
  EXPECT_EQ(a.substr(0, 8), std::string("\x89PNG\r\n\x1a\n", 8));
  EXPECT_EQ(a, read(dir / "b.png"));
  EXPECT_THROW(write_png(dir / "missing" / "c.png", img), IoError);
}

TEST(Png, LabelRenderingScalesPixels) {
  LabelMap m(2, 3, 0);
  m.values[4] = 1;
  const RgbImage img = render_labels(m, 3);
  EXPECT_EQ(img.width, 9);
  EXPECT_EQ(img.height, 6);
  EXPECT_NE(img.at(3, 3)[0], img.at(0, 0)[0]);
  EXPECT_EQ(img.at(5, 5)[0], img.at(3, 3)[0]);
}

}  // namespace
}  // namespace phiseg
