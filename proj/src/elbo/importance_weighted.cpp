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

#include <cmath>
#include <numbers>
#include <vector>

#include "phiseg/elbo.hpp"
#include "phiseg/errors.hpp"

namespace phiseg {

namespace {

double gaussian_log_density(const torch::Tensor& z, const GaussianParams& g) {
  const torch::Tensor sigma = g.sigma.clamp_min(kLogClamp);
  const torch::Tensor u = (z - g.mu) / sigma;
  const double half_log_2pi = 0.5 * std::log(2.0 * std::numbers::pi);
  return (-0.5 * u * u - torch::log(sigma) - half_log_2pi).sum().item<double>();
}

// log p(s|z) + log p(z|x) - log q(z|s,x) for one posterior draw.
double log_weight(PHiSeg& model, const torch::Tensor& x, const torch::Tensor& s,
                  torch::Generator& gen) {
  const ModelConfig& cfg = model->config();
  const auto noise = sample_level_noise(cfg, 1, gen, x.scalar_type());
  const LevelOutputs post = model->posterior_forward(x, s, noise);
  const LevelOutputs prior = model->prior_forward(x, {}, post.latents.z);
  const LogitPyramid pyr = model->likelihood_forward(post.latents);
  const torch::Tensor t = s.to(torch::kLong).unsqueeze(1);
  double w = torch::log_softmax(pyr.logits.front(), 1).gather(1, t).sum().item<double>();
  for (int i = 0; i < cfg.latent_levels; ++i) {
    const torch::Tensor& z = post.latents.z[i];
    w += gaussian_log_density(z, prior.params[i]) - gaussian_log_density(z, post.params[i]);
  }
  return w;
}

}  // namespace

double importance_weighted_logp_estimate(PHiSeg& model, const torch::Tensor& x,
                                         const torch::Tensor& s, int k, std::uint64_t seed) {
  if (k < 1) throw ContractError("importance_weighted_logp_estimate: k must be >= 1");
  if (model->deterministic()) {
    throw ContractError("importance_weighted_logp_estimate: model has no latent variables");
  }
  if (x.size(0) != 1) throw ContractError("importance_weighted_logp_estimate: batch must be 1");
  torch::NoGradGuard no_grad;
  torch::Generator gen = make_generator(seed);
  std::vector<double> w(k);
  for (int i = 0; i < k; ++i) w[i] = log_weight(model, x, s, gen);
  double top = w[0];
  for (double v : w) top = std::max(top, v);
  double acc = 0.0;
  for (double v : w) acc += std::exp(v - top);
  return top + std::log(acc / k);
}

double single_sample_elbo(PHiSeg& model, const torch::Tensor& x, const torch::Tensor& s,
                          std::uint64_t seed) {
  return importance_weighted_logp_estimate(model, x, s, 1, seed);
}

}  // namespace phiseg
