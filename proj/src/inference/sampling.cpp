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

#include <algorithm>
#include <cstring>

#include "phiseg/errors.hpp"
#include "phiseg/inference.hpp"
#include "phiseg/rng.hpp"

namespace phiseg {

namespace {

class EvalModeGuard {
 public:
  explicit EvalModeGuard(PHiSeg& model) : model_(model), was_training_(model->is_training()) {
    model_->eval();
  }
  ~EvalModeGuard() { model_->train(was_training_); }
  EvalModeGuard(const EvalModeGuard&) = delete;
  EvalModeGuard& operator=(const EvalModeGuard&) = delete;

 private:
  PHiSeg& model_;
  bool was_training_;
};

void append_probs(SampleSet& out, const torch::Tensor& logits) {
  const torch::Tensor probs = torch::softmax(logits, 1).to(torch::kFloat32).contiguous();
  const std::size_t per_sample = static_cast<std::size_t>(out.num_classes) * out.pixels();
  const float* src = probs.data_ptr<float>();
  for (int64_t b = 0; b < probs.size(0); ++b) {
    const std::size_t base = out.probs.size();
    out.probs.resize(base + per_sample);
    std::memcpy(out.probs.data() + base, src + b * per_sample, per_sample * sizeof(float));
    out.labels.push_back(argmax_labels(std::span<const float>(out.probs.data() + base, per_sample),
                                       out.num_classes, out.rows, out.cols));
  }
}

}  // namespace

SampleSet draw_samples(PHiSeg& model, const torch::Tensor& x, int n, std::uint64_t seed,
                       int chunk) {
  if (n < 1) throw ContractError("draw_samples: n must be >= 1");
  if (chunk < 1) throw ContractError("draw_samples: chunk must be >= 1");
  model->check_input(x);
  if (x.size(0) != 1) throw ContractError("draw_samples: expects a single image");

  const ModelConfig& cfg = model->config();
  SampleSet out;
  out.num_samples = n;
  out.rows = cfg.rows;
  out.cols = cfg.cols;
  out.num_classes = cfg.num_classes;
  out.seed = seed;
  out.probs.reserve(static_cast<std::size_t>(n) * cfg.num_classes * out.pixels());
  out.labels.reserve(n);

  torch::NoGradGuard no_grad;
  EvalModeGuard mode(model);

  if (model->deterministic()) {
    const torch::Tensor logits = model->deterministic_forward(x).logits.front();
    for (int i = 0; i < n; ++i) append_probs(out, logits);
    return out;
  }

  torch::Generator gen = make_generator(seed);
  for (int done = 0; done < n;) {
    const int c = std::min(chunk, n - done);
    const torch::Tensor xb = x.expand({c, x.size(1), x.size(2), x.size(3)}).contiguous();
    const auto noise = sample_level_noise(cfg, c, gen, x.scalar_type());
    const LevelOutputs prior = model->prior_forward(xb, noise);
    append_probs(out, model->likelihood_forward(prior.latents).logits.front());
    done += c;
  }
  return out;
}

std::uint64_t sample_seed(std::uint64_t base_seed, const std::string& image_id) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char ch : image_id) {
    h ^= ch;
    h *= 0x100000001b3ULL;
  }
  return derive_seed(base_seed, {h});
}

}  // namespace phiseg
