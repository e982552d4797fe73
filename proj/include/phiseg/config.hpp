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

#include <string>
#include <vector>

#include "json.hpp"

namespace phiseg {

enum class Activation { kRelu, kSilu };

std::string to_string(Activation a);
Activation activation_from_string(const std::string& name);

// Hyperparameters fixing the latent and resolution structure of a model.
//
// Level indices in code are zero-based: index i corresponds to latent level
// i + 1, whose grids have spatial size (rows >> i, cols >> i).
struct ModelConfig {
  int latent_levels = 5;      // L
  int resolution_levels = 7;  // R
  int latent_channels = 2;    // D
  int num_classes = 2;        // K
  int rows = 64;
  int cols = 64;
  int input_channels = 1;
  std::vector<int> channels;   // length R
  std::vector<double> alpha;   // length L, KL weight per level
  bool deterministic = false;  // plain encoder-decoder, no latent path
  Activation activation = Activation::kRelu;

  // Throws ConfigError on the first violated invariant.
  void validate() const;

  int level_rows(int level_index) const { return rows >> level_index; }
  int level_cols(int level_index) const { return cols >> level_index; }

  friend bool operator==(const ModelConfig&, const ModelConfig&) = default;
};

// base * {1, 2, 4, 6, 6, 6, 6, ...} truncated to `resolution_levels`.
std::vector<int> default_channels(int base, int resolution_levels);

// alpha_l = 2^(l-1) for l = 1..L.
std::vector<double> default_alpha(int latent_levels);

// Convenience constructor filling channels and alpha with the defaults above.
ModelConfig make_model_config(int latent_levels, int resolution_levels, int rows, int cols,
                              int base_channels = 16, int latent_channels = 2,
                              int num_classes = 2);

nlohmann::json to_json(const ModelConfig& config);
ModelConfig model_config_from_json(const nlohmann::json& j);

}  // namespace phiseg
