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

#include <cstring>
#include <sstream>

#include "phiseg/errors.hpp"
#include "phiseg/model.hpp"

namespace phiseg {

PHiSegImpl::PHiSegImpl(const ModelConfig& config) : config_(config) {
  config_.validate();
  if (config_.deterministic) {
    unet_ = register_module("unet", DeterministicUNet(config_));
    return;
  }
  posterior_ = register_module(
      "posterior", HierarchicalEncoder(config_, config_.input_channels + config_.num_classes));
  prior_ = register_module("prior", HierarchicalEncoder(config_, config_.input_channels));
  likelihood_ = register_module("likelihood", LikelihoodDecoder(config_));
}

void PHiSegImpl::check_input(const torch::Tensor& x) const {
  if (!x.defined() || x.dim() != 4 || x.size(1) != config_.input_channels ||
      x.size(2) != config_.rows || x.size(3) != config_.cols) {
    std::ostringstream msg;
    msg << "input must be [B, " << config_.input_channels << ", " << config_.rows << ", "
        << config_.cols << "], got " << (x.defined() ? x.sizes() : c10::IntArrayRef{});
    throw ContractError(msg.str());
  }
}

LevelOutputs PHiSegImpl::posterior_forward(const torch::Tensor& x, const torch::Tensor& s,
                                           const std::vector<torch::Tensor>& noise) {
  if (config_.deterministic) throw ContractError("deterministic model has no posterior");
  check_input(x);
  if (s.dim() != 3 || s.size(0) != x.size(0) || s.size(1) != config_.rows ||
      s.size(2) != config_.cols) {
    throw ContractError("mask must be [B, rows, cols] matching the input");
  }
  if (s.numel() > 0 && (s.min().item<int64_t>() < 0 || s.max().item<int64_t>() >= config_.num_classes)) {
    throw ContractError("mask contains a label outside [0, K)");
  }
  const torch::Tensor input =
      torch::cat({x, one_hot_labels(s, config_.num_classes, x.scalar_type())}, 1);
  return posterior_(input, noise);
}

LevelOutputs PHiSegImpl::prior_forward(const torch::Tensor& x,
                                       const std::vector<torch::Tensor>& noise,
                                       const std::vector<torch::Tensor>& injected) {
  if (config_.deterministic) throw ContractError("deterministic model has no prior");
  check_input(x);
  return prior_(x, noise, injected);
}

LogitPyramid PHiSegImpl::likelihood_forward(const LatentPyramid& z) {
  if (config_.deterministic) throw ContractError("deterministic model has no likelihood decoder");
  return likelihood_(z);
}

LogitPyramid PHiSegImpl::deterministic_forward(const torch::Tensor& x) {
  if (!config_.deterministic) throw ContractError("model is not the deterministic baseline");
  check_input(x);
  LogitPyramid out;
  out.logits.push_back(unet_(x));
  return out;
}

PHiSeg build_model(const ModelConfig& config, std::uint64_t seed) {
  config.validate();
  torch::manual_seed(seed);
  return PHiSeg(config);
}

std::uint64_t parameter_checksum(const torch::nn::Module& module) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  const auto feed = [&h](const torch::Tensor& t) {
    const torch::Tensor c = t.detach().contiguous().to(torch::kCPU);
    const auto* bytes = static_cast<const unsigned char*>(c.data_ptr());
    const std::size_t n = c.numel() * c.element_size();
    for (std::size_t i = 0; i < n; ++i) {
      h ^= bytes[i];
      h *= 0x100000001b3ULL;
    }
  };
  for (const auto& p : module.named_parameters()) feed(p.value());
  for (const auto& b : module.named_buffers()) feed(b.value());
  return h;
}

int64_t parameter_count(const torch::nn::Module& module) {
  int64_t n = 0;
  for (const auto& p : module.parameters()) n += p.numel();
  return n;
}

}  // namespace phiseg
