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
#include <string>

#include "phiseg/model.hpp"
#include "phiseg/samples.hpp"

namespace phiseg {

// Draws `n` segmentations of one image through the prior and the likelihood
// network with normalisation statistics frozen. x: [1, C_in, rows, cols].
// Noise is consumed in chunks of `chunk` samples from a generator seeded
// with `seed`, so the result is a pure function of (weights, x, n, seed,
// chunk). The model's train/eval mode is restored on return.
SampleSet draw_samples(PHiSeg& model, const torch::Tensor& x, int n, std::uint64_t seed,
                       int chunk = 16);

// Per-image sampling seed: hash of the base seed and the image id.
std::uint64_t sample_seed(std::uint64_t base_seed, const std::string& image_id);

}  // namespace phiseg
