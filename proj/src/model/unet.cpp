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

#include "phiseg/model.hpp"

namespace phiseg {

DeterministicUNetImpl::DeterministicUNetImpl(const ModelConfig& config) : config_(config) {
  const int R = config.resolution_levels;
  const auto& ch = config.channels;
  const Activation act = config.activation;
  for (int r = 0; r < R; ++r) {
    down_.push_back(register_module(
        "down" + std::to_string(r), DoubleConv(r == 0 ? config.input_channels : ch[r - 1], ch[r], act)));
  }
  for (int r = 0; r <= R - 2; ++r) {
    up_conv_.push_back(register_module("up_conv" + std::to_string(r), ConvBlock(ch[r + 1], ch[r], act)));
    up_merge_.push_back(register_module("up_merge" + std::to_string(r), DoubleConv(2 * ch[r], ch[r], act)));
  }
  head_ = register_module("head", torch::nn::Conv2d(torch::nn::Conv2dOptions(ch[0], config.num_classes, 1)));
}

torch::Tensor DeterministicUNetImpl::forward(const torch::Tensor& x) {
  const int R = config_.resolution_levels;
  std::vector<torch::Tensor> feats(R);
  feats[0] = down_[0](x);
  for (int r = 1; r < R; ++r) feats[r] = down_[r](torch::avg_pool2d(feats[r - 1], 2));
  torch::Tensor state = feats[R - 1];
  for (int r = R - 2; r >= 0; --r) {
    state = up_merge_[r](torch::cat({feats[r], up_conv_[r](upsample_nearest(state, 2))}, 1));
  }
  return head_(state);
}

}  // namespace phiseg
