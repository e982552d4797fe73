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

#include <ATen/CPUGeneratorImpl.h>

#include <sstream>

#include "phiseg/errors.hpp"
#include "phiseg/model.hpp"

namespace phiseg {

torch::Tensor reparam_sample(const GaussianParams& g, const torch::Tensor& noise) {
  if (!noise.defined() || noise.sizes() != g.mu.sizes() || g.sigma.sizes() != g.mu.sizes()) {
    std::ostringstream msg;
    msg << "reparam_sample: noise shape " << (noise.defined() ? noise.sizes() : c10::IntArrayRef{})
        << " does not match mu " << g.mu.sizes() << " at level " << g.level;
    throw ContractError(msg.str());
  }
  return g.mu + g.sigma * noise;
}

std::vector<torch::Tensor> sample_level_noise(const ModelConfig& config, int64_t batch,
                                              torch::Generator& gen, torch::ScalarType dtype) {
  std::vector<torch::Tensor> out;
  out.reserve(config.latent_levels);
  for (int i = 0; i < config.latent_levels; ++i) {
    out.push_back(torch::randn({batch, config.latent_channels, config.level_rows(i), config.level_cols(i)},
                               gen, torch::TensorOptions().dtype(dtype)));
  }
  return out;
}

std::vector<torch::Tensor> zero_level_noise(const ModelConfig& config, int64_t batch,
                                            torch::ScalarType dtype) {
  std::vector<torch::Tensor> out;
  out.reserve(config.latent_levels);
  for (int i = 0; i < config.latent_levels; ++i) {
    out.push_back(torch::zeros({batch, config.latent_channels, config.level_rows(i), config.level_cols(i)},
                               torch::TensorOptions().dtype(dtype)));
  }
  return out;
}

torch::Generator make_generator(std::uint64_t seed) {
  auto gen = at::make_generator<at::CPUGeneratorImpl>(seed);
  return gen;
}

}  // namespace phiseg
