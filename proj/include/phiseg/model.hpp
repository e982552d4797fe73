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

// Hierarchical probabilistic segmentation network: a posterior and a prior
// encoder that each emit one diagonal Gaussian per latent level, and a
// likelihood decoder that turns the latent pyramid into segmentation logits
// by residual refinement from the coarsest level upwards.
//
// Tensors are NCHW. Level index i (zero-based) holds grids of spatial size
// (rows >> i, cols >> i); index 0 is full resolution.

#include <torch/torch.h>

#include <cstdint>
#include <optional>
#include <vector>

#include "phiseg/config.hpp"

namespace phiseg {

inline constexpr double kSigmaFloor = 1e-5;

struct GaussianParams {
  torch::Tensor mu;     // [B, D, h, w]
  torch::Tensor sigma;  // [B, D, h, w], > 0
  int level = 0;
};

struct LatentPyramid {
  std::vector<torch::Tensor> z;  // z[i]: [B, D, rows >> i, cols >> i]
};

struct LogitPyramid {
  std::vector<torch::Tensor> logits;  // logits[i]: [B, K, rows >> i, cols >> i]
};

struct LevelOutputs {
  std::vector<GaussianParams> params;  // indexed by level
  LatentPyramid latents;
};

// mu + sigma * noise. Throws ContractError on a shape mismatch.
torch::Tensor reparam_sample(const GaussianParams& g, const torch::Tensor& noise);

torch::Tensor upsample_nearest(const torch::Tensor& x, int64_t factor);
torch::Tensor one_hot_labels(const torch::Tensor& labels, int64_t num_classes,
                             torch::ScalarType dtype = torch::kFloat32);

// Conv3x3 -> BatchNorm -> activation.
class ConvBlockImpl : public torch::nn::Module {
 public:
  ConvBlockImpl(int64_t in_channels, int64_t out_channels, Activation activation);
  torch::Tensor forward(const torch::Tensor& x);

 private:
  torch::nn::Conv2d conv_{nullptr};
  torch::nn::BatchNorm2d norm_{nullptr};
  Activation activation_;
};
TORCH_MODULE(ConvBlock);

// Two ConvBlocks.
class DoubleConvImpl : public torch::nn::Module {
 public:
  DoubleConvImpl(int64_t in_channels, int64_t out_channels, Activation activation);
  torch::Tensor forward(const torch::Tensor& x);

 private:
  ConvBlock first_{nullptr};
  ConvBlock second_{nullptr};
};
TORCH_MODULE(DoubleConv);

// Shared by prior and posterior. Downsamples through all resolution levels,
// runs a conventional decoder path back up to the coarsest latent level, then
// emits q or p for level L, L-1, ..., 1 where each level also sees the
// upsampled latent sample of the level below it.
class HierarchicalEncoderImpl : public torch::nn::Module {
 public:
  HierarchicalEncoderImpl(const ModelConfig& config, int64_t in_channels);

  // `noise` holds one standard-normal tensor per level (may be undefined for
  // levels that are injected). `injected[i]`, when defined, replaces the
  // sample at level i and is what the level above conditions on.
  LevelOutputs forward(const torch::Tensor& input, const std::vector<torch::Tensor>& noise,
                       const std::vector<torch::Tensor>& injected = {});

  const std::vector<int64_t>& draw_counts() const { return draws_; }

 private:
  ModelConfig config_;
  std::vector<DoubleConv> down_;      // per resolution level
  std::vector<ConvBlock> up_conv_;    // upsampled context, levels L-1 .. R-2
  std::vector<DoubleConv> up_merge_;  // after skip concat, levels L-1 .. R-2
  std::vector<ConvBlock> z_conv_;     // upsampled z_{i+1}, levels 0 .. L-2
  std::vector<DoubleConv> z_merge_;   // after concat, levels 0 .. L-2
  std::vector<torch::nn::Conv2d> mu_head_;
  std::vector<torch::nn::Conv2d> sigma_head_;
  std::vector<int64_t> draws_;
};
TORCH_MODULE(HierarchicalEncoder);

// p(s | z): every level decodes its own z, the coarser decoder state is
// upsampled and merged in, and each level adds a residual to the nearest-
// neighbour upsampled logits of the level below.
class LikelihoodDecoderImpl : public torch::nn::Module {
 public:
  explicit LikelihoodDecoderImpl(const ModelConfig& config);

  LogitPyramid forward(const LatentPyramid& z);

  // 1x1 conv producing logits (coarsest level) or the logit residual.
  torch::nn::Conv2d output_head(int level);

 private:
  ModelConfig config_;
  std::vector<DoubleConv> post_z_;  // per latent level
  std::vector<ConvBlock> up_conv_;  // levels 0 .. L-2
  std::vector<DoubleConv> merge_;   // levels 0 .. L-2
  std::vector<torch::nn::Conv2d> head_;
};
TORCH_MODULE(LikelihoodDecoder);

// Encoder-decoder with ordinary feature skips and no latent variables.
class DeterministicUNetImpl : public torch::nn::Module {
 public:
  explicit DeterministicUNetImpl(const ModelConfig& config);
  torch::Tensor forward(const torch::Tensor& x);

 private:
  ModelConfig config_;
  std::vector<DoubleConv> down_;
  std::vector<ConvBlock> up_conv_;   // levels 0 .. R-2
  std::vector<DoubleConv> up_merge_;
  torch::nn::Conv2d head_{nullptr};
};
TORCH_MODULE(DeterministicUNet);

class PHiSegImpl : public torch::nn::Module {
 public:
  explicit PHiSegImpl(const ModelConfig& config);

  const ModelConfig& config() const { return config_; }
  bool deterministic() const { return config_.deterministic; }

  // x: [B, C_in, rows, cols]; s: [B, rows, cols] integer labels.
  LevelOutputs posterior_forward(const torch::Tensor& x, const torch::Tensor& s,
                                 const std::vector<torch::Tensor>& noise);
  LevelOutputs prior_forward(const torch::Tensor& x, const std::vector<torch::Tensor>& noise,
                             const std::vector<torch::Tensor>& injected = {});
  LogitPyramid likelihood_forward(const LatentPyramid& z);

  // Logits of the baseline network; only valid when deterministic().
  LogitPyramid deterministic_forward(const torch::Tensor& x);

  HierarchicalEncoder& posterior() { return posterior_; }
  HierarchicalEncoder& prior() { return prior_; }
  LikelihoodDecoder& likelihood() { return likelihood_; }

  // Per-level count of latent samples each encoder has drawn (injected
  // levels are not counted).
  const std::vector<int64_t>& posterior_draws() const { return posterior_->draw_counts(); }
  const std::vector<int64_t>& prior_draws() const { return prior_->draw_counts(); }

  void check_input(const torch::Tensor& x) const;

 private:
  ModelConfig config_;
  HierarchicalEncoder posterior_{nullptr};
  HierarchicalEncoder prior_{nullptr};
  LikelihoodDecoder likelihood_{nullptr};
  DeterministicUNet unet_{nullptr};
};
TORCH_MODULE(PHiSeg);

// Validates the config and constructs a model whose initial parameters are
// a pure function of (config, seed).
PHiSeg build_model(const ModelConfig& config, std::uint64_t seed);

// One standard-normal tensor per latent level.
std::vector<torch::Tensor> sample_level_noise(const ModelConfig& config, int64_t batch,
                                              torch::Generator& gen,
                                              torch::ScalarType dtype = torch::kFloat32);

std::vector<torch::Tensor> zero_level_noise(const ModelConfig& config, int64_t batch,
                                            torch::ScalarType dtype = torch::kFloat32);

// FNV-1a over every parameter and buffer in registration order.
std::uint64_t parameter_checksum(const torch::nn::Module& module);
int64_t parameter_count(const torch::nn::Module& module);

torch::Generator make_generator(std::uint64_t seed);

}  // namespace phiseg
