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
#include <cmath>
#include <cstdio>
#include <numbers>

#include "phiseg/data.hpp"
#include "phiseg/errors.hpp"
#include "phiseg/rng.hpp"

namespace phiseg {

namespace {

using Field = std::vector<double>;

// Separable Gaussian blur with replicated borders.
Field gaussian_blur(const Field& in, int rows, int cols, double sigma) {
  if (sigma <= 0.0) return in;
  const int radius = std::max(1, static_cast<int>(std::ceil(3.0 * sigma)));
  std::vector<double> kernel(2 * radius + 1);
  double norm = 0.0;
  for (int i = -radius; i <= radius; ++i) {
    kernel[i + radius] = std::exp(-0.5 * i * i / (sigma * sigma));
    norm += kernel[i + radius];
  }
  for (double& k : kernel) k /= norm;

  Field tmp(in.size()), out(in.size());
  for (int r = 0; r < rows; ++r) {
    for (int c = 0; c < cols; ++c) {
      double acc = 0.0;
      for (int i = -radius; i <= radius; ++i) {
        const int cc = std::clamp(c + i, 0, cols - 1);
        acc += kernel[i + radius] * in[r * cols + cc];
      }
      tmp[r * cols + c] = acc;
    }
  }
  for (int r = 0; r < rows; ++r) {
    for (int c = 0; c < cols; ++c) {
      double acc = 0.0;
      for (int i = -radius; i <= radius; ++i) {
        const int rr = std::clamp(r + i, 0, rows - 1);
        acc += kernel[i + radius] * tmp[rr * cols + c];
      }
      out[r * cols + c] = acc;
    }
  }
  return out;
}

void standardize(Field& f) {
  double mean = 0.0;
  for (double v : f) mean += v;
  mean /= static_cast<double>(f.size());
  double var = 0.0;
  for (double v : f) var += (v - mean) * (v - mean);
  const double sd = std::sqrt(var / static_cast<double>(f.size()));
  for (double& v : f) v = sd > 1e-12 ? (v - mean) / sd : 0.0;
}

// Unit-variance smooth random field.
Field smooth_noise(Rng& rng, int rows, int cols, double sigma) {
  Field f(static_cast<std::size_t>(rows) * cols);
  for (double& v : f) v = rng.normal();
  f = gaussian_blur(f, rows, cols, sigma);
  standardize(f);
  return f;
}

// Binary dilation (radius > 0) or erosion (radius < 0) with a disk.
std::vector<bool> morph(const std::vector<bool>& mask, int rows, int cols, int radius) {
  if (radius == 0) return mask;
  const bool dilate = radius > 0;
  const int r = std::abs(radius);
  std::vector<bool> out(mask.size());
  for (int y = 0; y < rows; ++y) {
    for (int x = 0; x < cols; ++x) {
      bool hit = !dilate;
      for (int dy = -r; dy <= r && hit != dilate; ++dy) {
        for (int dx = -r; dx <= r; ++dx) {
          if (dx * dx + dy * dy > r * r) continue;
          const int yy = y + dy, xx = x + dx;
          // Outside the image counts as background.
          const bool v = yy >= 0 && yy < rows && xx >= 0 && xx < cols && mask[yy * cols + xx];
          if (dilate && v) {
            hit = true;
            break;
          }
          if (!dilate && !v) {
            hit = false;
            break;
          }
        }
      }
      out[y * cols + x] = hit;
    }
  }
  return out;
}

// Spacing between nested class levels of the object field when K > 2.
constexpr double kClassLevelSpacing = 0.35;

}  // namespace

void SynthSpec::validate() const {
  const auto fail = [](const std::string& m) { throw ConfigError("synth spec: " + m); };
  if (num_cases < 1) fail("num_cases must be >= 1");
  if (rows < 4 || cols < 4) fail("image size too small");
  if (num_classes < 2 || num_classes > 255) fail("num_classes must be in [2, 255]");
  if (annotators.empty()) fail("need at least one annotator");
  for (const AnnotatorStyle& a : annotators) {
    if (!(a.omission_prob >= 0.0 && a.omission_prob <= 1.0)) {
      fail("omission probability must lie in [0, 1]");
    }
  }
  if (noise_amplitude < 0.0 || blur_scale < 0.0 || shape_jitter < 0.0 || annotator_jitter < 0.0) {
    fail("noise, blur and jitter amplitudes must be non-negative");
  }
  double total = 0.0;
  for (double r : split_ratios) {
    if (r < 0.0) fail("split ratios must be non-negative");
    total += r;
  }
  if (std::abs(total - 1.0) > 1e-9) fail("split ratios must sum to 1");
}

SynthSpec default_synth_spec() {
  SynthSpec s;
  s.annotators = {
      {0.0, 0, 0.0},
      {1.5, 0, 0.0},
      {-1.5, 1, 0.0},
      {0.5, -1, 0.25},
  };
  return s;
}

nlohmann::json to_json(const SynthSpec& s) {
  nlohmann::json ann = nlohmann::json::array();
  for (const AnnotatorStyle& a : s.annotators) {
    ann.push_back({{"threshold_offset", a.threshold_offset},
                   {"radius_offset", a.radius_offset},
                   {"omission_prob", a.omission_prob}});
  }
  return {{"num_cases", s.num_cases},
          {"rows", s.rows},
          {"cols", s.cols},
          {"num_classes", s.num_classes},
          {"annotators", ann},
          {"threshold_step", s.threshold_step},
          {"noise_amplitude", s.noise_amplitude},
          {"blur_scale", s.blur_scale},
          {"shape_jitter", s.shape_jitter},
          {"annotator_jitter", s.annotator_jitter},
          {"split_ratios", s.split_ratios},
          {"seed", s.seed}};
}

SynthSpec synth_spec_from_json(const nlohmann::json& j) {
  static const char* kKeys[] = {"num_cases",        "rows",         "cols",
                                "num_classes",      "annotators",   "threshold_step",
                                "noise_amplitude",  "blur_scale",   "shape_jitter",
                                "annotator_jitter", "split_ratios", "seed"};
  if (!j.is_object()) throw ConfigError("synth spec must be an object");
  for (const auto& [key, _] : j.items()) {
    if (std::find(std::begin(kKeys), std::end(kKeys), key) == std::end(kKeys)) {
      throw ConfigError("synth spec: unknown key '" + key + "'");
    }
  }
  SynthSpec s = default_synth_spec();
  try {
    if (j.contains("num_cases")) s.num_cases = j["num_cases"].get<int>();
    if (j.contains("rows")) s.rows = j["rows"].get<int>();
    if (j.contains("cols")) s.cols = j["cols"].get<int>();
    if (j.contains("num_classes")) s.num_classes = j["num_classes"].get<int>();
    if (j.contains("threshold_step")) s.threshold_step = j["threshold_step"].get<double>();
    if (j.contains("noise_amplitude")) s.noise_amplitude = j["noise_amplitude"].get<double>();
    if (j.contains("blur_scale")) s.blur_scale = j["blur_scale"].get<double>();
    if (j.contains("shape_jitter")) s.shape_jitter = j["shape_jitter"].get<double>();
    if (j.contains("annotator_jitter")) s.annotator_jitter = j["annotator_jitter"].get<double>();
    if (j.contains("split_ratios")) s.split_ratios = j["split_ratios"].get<std::array<double, 3>>();
    if (j.contains("seed")) s.seed = j["seed"].get<std::uint64_t>();
    if (j.contains("annotators")) {
      s.annotators.clear();
      for (const auto& a : j["annotators"]) {
        for (const auto& [key, _] : a.items()) {
          if (key != "threshold_offset" && key != "radius_offset" && key != "omission_prob") {
            throw ConfigError("synth spec annotator: unknown key '" + key + "'");
          }
        }
        AnnotatorStyle style;
        style.threshold_offset = a.value("threshold_offset", 0.0);
        style.radius_offset = a.value("radius_offset", 0);
        style.omission_prob = a.value("omission_prob", 0.0);
        s.annotators.push_back(style);
      }
    }
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError(std::string("synth spec: ") + e.what());
  }
  s.validate();
  return s;
}

std::string case_id(int index) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "case_%04d", index);
  return buf;
}

Case synthesize_case(const SynthSpec& spec, int index) {
  const int rows = spec.rows, cols = spec.cols;
  const std::size_t n = static_cast<std::size_t>(rows) * cols;
  const double size = std::min(rows, cols);
  Rng rng(derive_seed(spec.seed, {static_cast<std::uint64_t>(index), 0}));

  // Latent object: a rotated ellipse whose normalised radius is perturbed by
  // a smooth field. The object occupies field > 0.
  const double cy = rows * (0.3 + 0.4 * rng.uniform());
  const double cx = cols * (0.3 + 0.4 * rng.uniform());
  const double a = size * (0.12 + 0.1 * rng.uniform());
  const double b = size * (0.12 + 0.1 * rng.uniform());
  const double theta = std::numbers::pi * rng.uniform();
  const Field shape = smooth_noise(rng, rows, cols, size / 8.0);
  const Field clutter = smooth_noise(rng, rows, cols, size / 6.0);

  Field field(n);
  for (int y = 0; y < rows; ++y) {
    for (int x = 0; x < cols; ++x) {
      const double dy = y + 0.5 - cy, dx = x + 0.5 - cx;
      const double u = (dx * std::cos(theta) + dy * std::sin(theta)) / a;
      const double v = (-dx * std::sin(theta) + dy * std::cos(theta)) / b;
      field[y * cols + x] = 1.0 - std::sqrt(u * u + v * v) + spec.shape_jitter * shape[y * cols + x];
    }
  }

  Field image(n);
  for (std::size_t i = 0; i < n; ++i) {
    image[i] = std::tanh(3.0 * field[i]) + 0.3 * clutter[i] + spec.noise_amplitude * rng.normal();
  }
  image = gaussian_blur(image, rows, cols, spec.blur_scale);
  standardize(image);

  Case c;
  c.id = case_id(index);
  c.rows = rows;
  c.cols = cols;
  c.image.assign(image.begin(), image.end());

  for (std::size_t m = 0; m < spec.annotators.size(); ++m) {
    const AnnotatorStyle& style = spec.annotators[m];
    Rng arng(derive_seed(spec.seed, {static_cast<std::uint64_t>(index), m + 1}));
    const Field jitter = smooth_noise(arng, rows, cols, size / 10.0);
    const bool omitted = arng.bernoulli(style.omission_prob);
    LabelMap mask(rows, cols, 0);
    if (!omitted) {
      const double base = style.threshold_offset * spec.threshold_step;
      for (int level = 1; level < spec.num_classes; ++level) {
        const double t = base + (level - 1) * kClassLevelSpacing;
        std::vector<bool> in(n);
        for (std::size_t i = 0; i < n; ++i) {
          in[i] = field[i] + spec.annotator_jitter * jitter[i] > t;
        }
        in = morph(in, rows, cols, style.radius_offset);
        for (std::size_t i = 0; i < n; ++i) {
          if (in[i]) mask.values[i] = static_cast<std::uint8_t>(level);
        }
      }
    }
    c.annotations.push_back(std::move(mask));
  }
  return c;
}

std::vector<Split> split_cases(std::size_t num_cases, const std::array<double, 3>& ratios,
                               std::uint64_t seed) {
  double total = 0.0;
  for (double r : ratios) {
    if (!(r >= 0.0)) throw ConfigError("split ratios must be non-negative");
    total += r;
  }
  if (std::abs(total - 1.0) > 1e-9) throw ConfigError("split ratios must sum to 1");
  const auto n_train = static_cast<std::size_t>(std::llround(num_cases * ratios[0]));
  const auto n_val =
      std::min(num_cases - n_train, static_cast<std::size_t>(std::llround(num_cases * ratios[1])));

  std::vector<std::size_t> order(num_cases);
  for (std::size_t i = 0; i < num_cases; ++i) order[i] = i;
  Rng rng(derive_seed(seed, {0x5b11u}));
  rng.shuffle(order.begin(), order.end());

  std::vector<Split> out(num_cases, Split::kTest);
  for (std::size_t i = 0; i < num_cases; ++i) {
    if (i < n_train) {
      out[order[i]] = Split::kTrain;
    } else if (i < n_train + n_val) {
      out[order[i]] = Split::kVal;
    }
  }
  return out;
}

}  // namespace phiseg
