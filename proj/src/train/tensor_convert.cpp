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
#include "phiseg/train.hpp"

namespace phiseg {

void configure_determinism() {
  torch::set_num_threads(1);
  at::globalContext().setDeterministicAlgorithms(true, false);
}

torch::Tensor images_to_tensor(const std::vector<float>& images, int batch, int rows, int cols) {
  const std::size_t n = static_cast<std::size_t>(batch) * rows * cols;
  if (images.size() != n) throw ContractError("images_to_tensor: buffer size mismatch");
  return torch::from_blob(const_cast<float*>(images.data()), {batch, 1, rows, cols},
                          torch::kFloat32)
      .clone();
}

torch::Tensor masks_to_tensor(const std::vector<std::uint8_t>& masks, int batch, int rows,
                              int cols) {
  const std::size_t n = static_cast<std::size_t>(batch) * rows * cols;
  if (masks.size() != n) throw ContractError("masks_to_tensor: buffer size mismatch");
  return torch::from_blob(const_cast<std::uint8_t*>(masks.data()), {batch, rows, cols},
                          torch::kUInt8)
      .to(torch::kLong);
}

torch::Tensor case_image_tensor(const Case& c) {
  return images_to_tensor(c.image, 1, c.rows, c.cols);
}

torch::Tensor label_tensor(const LabelMap& labels) {
  return masks_to_tensor(labels.values, 1, labels.rows, labels.cols);
}

}  // namespace phiseg
