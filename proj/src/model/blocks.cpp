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

#include "phiseg/errors.hpp"
#include "phiseg/model.hpp"

namespace phiseg {

ConvBlockImpl::ConvBlockImpl(int64_t in_channels, int64_t out_channels, Activation activation)
    : activation_(activation) {
  conv_ = register_module(
      "conv", torch::nn::Conv2d(
                  torch::nn::Conv2dOptions(in_channels, out_channels, 3).padding(1).bias(false)));
  norm_ = register_module("norm", torch::nn::BatchNorm2d(out_channels));
}

torch::Tensor ConvBlockImpl::forward(const torch::Tensor& x) {
  torch::Tensor y = norm_(conv_(x));
  switch (activation_) {
    case Activation::kRelu:
      return torch::relu(y);
    case Activation::kSilu:
      return torch::silu(y);
  }
  return y;
}

DoubleConvImpl::DoubleConvImpl(int64_t in_channels, int64_t out_channels, Activation activation) {
  first_ = register_module("first", ConvBlock(in_channels, out_channels, activation));
  second_ = register_module("second", ConvBlock(out_channels, out_channels, activation));
}

torch::Tensor DoubleConvImpl::forward(const torch::Tensor& x) { return second_(first_(x)); }

torch::Tensor upsample_nearest(const torch::Tensor& x, int64_t factor) {
  if (factor == 1) return x;
  // [B, C, h, w] -> [B, C, h, f, w, f] -> [B, C, h*f, w*f]; exact replication.
  const auto sizes = x.sizes();
  return x.unsqueeze(3)
      .unsqueeze(5)
      .expand({sizes[0], sizes[1], sizes[2], factor, sizes[3], factor})
      .reshape({sizes[0], sizes[1], sizes[2] * factor, sizes[3] * factor});
}

torch::Tensor one_hot_labels(const torch::Tensor& labels, int64_t num_classes,
                             torch::ScalarType dtype) {
  if (labels.dim() != 3) throw ContractError("labels must be [B, H, W]");
  return torch::one_hot(labels.to(torch::kLong), num_classes).permute({0, 3, 1, 2}).to(dtype);
}

}  // namespace phiseg
