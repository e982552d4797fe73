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

#include "phiseg/config.hpp"

#include <cmath>

#include "phiseg/errors.hpp"

namespace phiseg {

std::string to_string(Activation a) {
  switch (a) {
    case Activation::kRelu:
      return "relu";
    case Activation::kSilu:
      return "silu";
  }
  return "relu";
}

Activation activation_from_string(const std::string& name) {
  if (name == "relu") return Activation::kRelu;
  if (name == "silu") return Activation::kSilu;
  throw ConfigError("unknown activation '" + name + "'");
}

void ModelConfig::validate() const {
  const auto fail = [](const std::string& msg) { throw ConfigError("model config: " + msg); };
  if (resolution_levels < 1) fail("resolution_levels must be >= 1");
  if (latent_levels < 1 || latent_levels > resolution_levels) {
    fail("latent_levels must satisfy 1 <= L <= R");
  }
  if (latent_channels < 1) fail("latent_channels must be >= 1");
  if (num_classes < 2 || num_classes > 255) fail("num_classes must be in [2, 255]");
  if (input_channels < 1) fail("input_channels must be >= 1");
  const int factor = 1 << (resolution_levels - 1);
  if (rows <= 0 || cols <= 0 || rows % factor != 0 || cols % factor != 0) {
    fail("rows and cols must be positive multiples of 2^(R-1) = " + std::to_string(factor));
  }
  if (static_cast<int>(channels.size()) != resolution_levels) {
    fail("channels must have one entry per resolution level");
  }
  for (int c : channels) {
    if (c < 1) fail("channel counts must be positive");
  }
  if (static_cast<int>(alpha.size()) != latent_levels) {
    fail("alpha must have one entry per latent level");
  }
  for (double a : alpha) {
    if (!(a > 0.0) || !std::isfinite(a)) fail("alpha entries must be positive and finite");
  }
}

std::vector<int> default_channels(int base, int resolution_levels) {
  static constexpr int kMultipliers[] = {1, 2, 4, 6};
  std::vector<int> out;
  out.reserve(resolution_levels);
  for (int i = 0; i < resolution_levels; ++i) {
    out.push_back(base * kMultipliers[i < 4 ? i : 3]);
  }
  return out;
}

std::vector<double> default_alpha(int latent_levels) {
  std::vector<double> out;
  out.reserve(latent_levels);
  for (int l = 0; l < latent_levels; ++l) out.push_back(std::ldexp(1.0, l));
  return out;
}

ModelConfig make_model_config(int latent_levels, int resolution_levels, int rows, int cols,
                              int base_channels, int latent_channels, int num_classes) {
  ModelConfig c;
  c.latent_levels = latent_levels;
  c.resolution_levels = resolution_levels;
  c.rows = rows;
  c.cols = cols;
  c.latent_channels = latent_channels;
  c.num_classes = num_classes;
  c.channels = default_channels(base_channels, resolution_levels);
  c.alpha = default_alpha(latent_levels);
  return c;
}

nlohmann::json to_json(const ModelConfig& c) {
  return {
      {"latent_levels", c.latent_levels},
      {"resolution_levels", c.resolution_levels},
      {"latent_channels", c.latent_channels},
      {"num_classes", c.num_classes},
      {"rows", c.rows},
      {"cols", c.cols},
      {"input_channels", c.input_channels},
      {"channels", c.channels},
      {"alpha", c.alpha},
      {"deterministic", c.deterministic},
      {"activation", to_string(c.activation)},
  };
}

ModelConfig model_config_from_json(const nlohmann::json& j) {
  try {
    ModelConfig c;
    c.latent_levels = j.at("latent_levels").get<int>();
    c.resolution_levels = j.at("resolution_levels").get<int>();
    c.latent_channels = j.at("latent_channels").get<int>();
    c.num_classes = j.at("num_classes").get<int>();
    c.rows = j.at("rows").get<int>();
    c.cols = j.at("cols").get<int>();
    c.input_channels = j.at("input_channels").get<int>();
    c.channels = j.at("channels").get<std::vector<int>>();
    c.alpha = j.at("alpha").get<std::vector<double>>();
    c.deterministic = j.at("deterministic").get<bool>();
    c.activation = activation_from_string(j.at("activation").get<std::string>());
    c.validate();
    return c;
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError(std::string("model config record: ") + e.what());
  }
}

}  // namespace phiseg
