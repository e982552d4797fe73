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

#include <string>

#include "phiseg/errors.hpp"
#include "phiseg/model.hpp"

namespace phiseg {

LikelihoodDecoderImpl::LikelihoodDecoderImpl(const ModelConfig& config) : config_(config) {
  const int L = config.latent_levels;
  const auto& ch = config.channels;
  const Activation act = config.activation;
  for (int i = 0; i < L; ++i) {
    post_z_.push_back(register_module("post_z" + std::to_string(i),
                                      DoubleConv(config.latent_channels, ch[i], act)));
  }
  for (int i = 0; i <= L - 2; ++i) {
    up_conv_.push_back(register_module("up_conv" + std::to_string(i), ConvBlock(ch[i + 1], ch[i], act)));
    merge_.push_back(register_module("merge" + std::to_string(i), DoubleConv(2 * ch[i], ch[i], act)));
  }
  for (int i = 0; i < L; ++i) {
    head_.push_back(register_module(
        "head" + std::to_string(i),
        torch::nn::Conv2d(torch::nn::Conv2dOptions(ch[i], config.num_classes, 1))));
  }
}

torch::nn::Conv2d LikelihoodDecoderImpl::output_head(int level) { return head_.at(level); }

LogitPyramid LikelihoodDecoderImpl::forward(const LatentPyramid& z) {
  const int L = config_.latent_levels;
  if (static_cast<int>(z.z.size()) != L) {
    throw ContractError("latent pyramid has " + std::to_string(z.z.size()) + " levels, expected " +
                        std::to_string(L));
  }
  for (int i = 0; i < L; ++i) {
    const auto& t = z.z[i];
    if (!t.defined() || t.dim() != 4 || t.size(1) != config_.latent_channels ||
        t.size(2) != config_.level_rows(i) || t.size(3) != config_.level_cols(i)) {
      throw ContractError("latent grid at level " + std::to_string(i) + " has the wrong shape");
    }
  }

  LogitPyramid out;
  out.logits.resize(L);
  torch::Tensor state = post_z_[L - 1](z.z[L - 1]);
  out.logits[L - 1] = head_[L - 1](state);
  for (int i = L - 2; i >= 0; --i) {
    state = merge_[i](torch::cat({post_z_[i](z.z[i]), up_conv_[i](upsample_nearest(state, 2))}, 1));
    out.logits[i] = upsample_nearest(out.logits[i + 1], 2) + head_[i](state);
  }
  return out;
}

}  // namespace phiseg
