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

#include <torch/torch.h>

#include <cstdint>
#include <vector>

#include "phiseg/model.hpp"

namespace phiseg {

inline constexpr double kLogClamp = 1e-10;

// KL(q || p) for axis-aligned Gaussians, summed over channels and positions
// and averaged over the batch. Throws ContractError on shape mismatch or a
// non-positive sigma.
torch::Tensor kl_diag_gaussian(const GaussianParams& q, const GaussianParams& p);

// Mean over pixels (and batch) of -log softmax(logits)[target]. `weights`,
// when defined, is a per-pixel [B, H, W] mask and turns the mean into a
// weighted mean. logits: [B, K, H, W]; target: [B, H, W] integer.
torch::Tensor categorical_ce(const torch::Tensor& logits, const torch::Tensor& target,
                             const torch::Tensor& weights = {});

// CE of each coarser level's logits, nearest-neighbour upsampled to full
// resolution, for levels 2..L (indices 1..L-1).
std::vector<torch::Tensor> deep_supervision_loss(const LogitPyramid& pyramid,
                                                 const torch::Tensor& target);

struct LossBreakdown {
  double recon_ce = 0.0;
  std::vector<double> kl;           // one per latent level
  std::vector<double> deep_sup_ce;  // levels 2..L
  double total = 0.0;
  torch::Tensor total_tensor;       // differentiable
};

// total = recon + sum_l alpha_l KL_l + sum_{l>1} deep_sup_l. recon and the
// deep supervision terms are per-image sums over pixels (pixel count times
// categorical_ce), on the same scale as the KL terms. The prior parameters at
// level l must have been computed from the posterior's z_{l+1}.
LossBreakdown total_loss(const std::vector<GaussianParams>& posterior,
                         const std::vector<GaussianParams>& prior, const LogitPyramid& pyramid,
                         const torch::Tensor& target, const std::vector<double>& alpha);

// Loss of the deterministic baseline: pixel-summed recon CE only, no KL, no
// deep supervision.
LossBreakdown deterministic_loss(const LogitPyramid& pyramid, const torch::Tensor& target);

// One training-objective evaluation with a single latent sample per level:
// posterior pass, prior pass conditioned on the posterior samples, decode.
LossBreakdown model_loss(PHiSeg& model, const torch::Tensor& x, const torch::Tensor& s,
                         const std::vector<torch::Tensor>& posterior_noise);

// Scalar linear-Gaussian chain over L one-dimensional latents:
//   z_L ~ N(offset[L-1], variance[L-1])
//   z_l | z_{l+1} ~ N(scale[l-1] * z_{l+1} + offset[l-1], variance[l-1]).
// scale[L-1] is unused.
struct LinearGaussianChain {
  std::vector<double> scale;
  std::vector<double> offset;
  std::vector<double> variance;
};

struct LinearGaussianChainSpec {
  LinearGaussianChain q;
  LinearGaussianChain p;
};

struct ChainKlReport {
  double lhs = 0.0;  // KL between the joint Gaussians
  double rhs = 0.0;  // top-level KL + expected conditional KLs
  double abs_diff = 0.0;
};

// Evaluates the hierarchical KL decomposition in closed form two ways.
// Requires 1 <= L <= 4 and positive variances.
ChainKlReport verify_kl_chain_decomposition(const LinearGaussianChainSpec& spec);

// log-mean-exp over k posterior samples of
//   log p(s|z) + log p(z|x) - log q(z|s,x)
// with every term summed over pixels/positions. x: [1, C, H, W]; s: [1, H, W].
// The model is evaluated in its current train/eval mode; callers normally
// put it in eval mode first.
double importance_weighted_logp_estimate(PHiSeg& model, const torch::Tensor& x,
                                         const torch::Tensor& s, int k, std::uint64_t seed);

// Single-draw value of the integrand above (the k = 1 estimate).
double single_sample_elbo(PHiSeg& model, const torch::Tensor& x, const torch::Tensor& s,
                          std::uint64_t seed);

}  // namespace phiseg
