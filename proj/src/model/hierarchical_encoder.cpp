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

#include <sstream>
#include <string>

#include "phiseg/errors.hpp"
#include "phiseg/model.hpp"

namespace phiseg {

HierarchicalEncoderImpl::HierarchicalEncoderImpl(const ModelConfig& config, int64_t in_channels)
    : config_(config), draws_(config.latent_levels, 0) {
  const int L = config.latent_levels;
  const int R = config.resolution_levels;
  const int D = config.latent_channels;
  const auto& ch = config.channels;
  const Activation act = config.activation;

  for (int r = 0; r < R; ++r) {
    down_.push_back(register_module("down" + std::to_string(r),
                                    DoubleConv(r == 0 ? in_channels : ch[r - 1], ch[r], act)));
  }
  for (int r = L - 1; r <= R - 2; ++r) {
    up_conv_.push_back(register_module("up_conv" + std::to_string(r), ConvBlock(ch[r + 1], ch[r], act)));
    up_merge_.push_back(
        register_module("up_merge" + std::to_string(r), DoubleConv(2 * ch[r], ch[r], act)));
  }
  for (int i = 0; i <= L - 2; ++i) {
    z_conv_.push_back(register_module("z_conv" + std::to_string(i), ConvBlock(D, ch[i], act)));
    z_merge_.push_back(register_module("z_merge" + std::to_string(i), DoubleConv(2 * ch[i], ch[i], act)));
  }
  for (int i = 0; i < L; ++i) {
    mu_head_.push_back(register_module("mu_head" + std::to_string(i),
                                       torch::nn::Conv2d(torch::nn::Conv2dOptions(ch[i], D, 1))));
    sigma_head_.push_back(register_module(
        "sigma_head" + std::to_string(i), torch::nn::Conv2d(torch::nn::Conv2dOptions(ch[i], D, 1))));
  }
}

LevelOutputs HierarchicalEncoderImpl::forward(const torch::Tensor& input,
                                              const std::vector<torch::Tensor>& noise,
                                              const std::vector<torch::Tensor>& injected) {
  const int L = config_.latent_levels;
  const int R = config_.resolution_levels;
  if (!injected.empty() && static_cast<int>(injected.size()) != L) {
    throw ContractError("injected latents must be empty or one entry per level");
  }
  if (!noise.empty() && static_cast<int>(noise.size()) != L) {
    throw ContractError("noise must have one entry per latent level");
  }

  std::vector<torch::Tensor> feats(R);
  feats[0] = down_[0](input);
  for (int r = 1; r < R; ++r) feats[r] = down_[r](torch::avg_pool2d(feats[r - 1], 2));

  torch::Tensor context = feats[R - 1];
  for (int r = R - 2; r >= L - 1; --r) {
    const std::size_t j = static_cast<std::size_t>(r - (L - 1));
    context = up_merge_[j](torch::cat({feats[r], up_conv_[j](upsample_nearest(context, 2))}, 1));
  }

  LevelOutputs out;
  out.params.resize(L);
  out.latents.z.resize(L);
  for (int i = L - 1; i >= 0; --i) {
    torch::Tensor h;
    if (i == L - 1) {
      h = context;
    } else {
      const torch::Tensor from_below = z_conv_[i](upsample_nearest(out.latents.z[i + 1], 2));
      h = z_merge_[i](torch::cat({feats[i], from_below}, 1));
    }
    GaussianParams g;
    g.level = i;
    g.mu = mu_head_[i](h);
    g.sigma = torch::softplus(sigma_head_[i](h)) + kSigmaFloor;

    const bool use_injected = !injected.empty() && injected[i].defined();
    if (use_injected) {
      if (injected[i].sizes() != g.mu.sizes()) {
        std::ostringstream msg;
        msg << "injected latent at level " << i << " has shape " << injected[i].sizes()
            << ", expected " << g.mu.sizes();
        throw ContractError(msg.str());
      }
      out.latents.z[i] = injected[i];
    } else {
      if (noise.empty()) throw ContractError("missing noise for level " + std::to_string(i));
      out.latents.z[i] = reparam_sample(g, noise[i]);
      ++draws_[i];
    }
    out.params[i] = std::move(g);
  }
  return out;
}

}  // namespace phiseg
