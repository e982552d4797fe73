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

#include "phiseg/elbo.hpp"
#include "phiseg/errors.hpp"

namespace phiseg {

torch::Tensor kl_diag_gaussian(const GaussianParams& q, const GaussianParams& p) {
  if (q.mu.sizes() != p.mu.sizes() || q.sigma.sizes() != q.mu.sizes() ||
      p.sigma.sizes() != p.mu.sizes()) {
    std::ostringstream msg;
    msg << "kl_diag_gaussian: shape mismatch " << q.mu.sizes() << " vs " << p.mu.sizes();
    throw ContractError(msg.str());
  }
  if ((q.sigma <= 0).any().item<bool>() || (p.sigma <= 0).any().item<bool>()) {
    throw ContractError("kl_diag_gaussian: sigma must be strictly positive");
  }
  const torch::Tensor var_ratio = (q.sigma / p.sigma).pow(2);
  const torch::Tensor mean_term = ((p.mu - q.mu) / p.sigma).pow(2);
  const torch::Tensor log_term =
      torch::log(p.sigma.clamp_min(kLogClamp)) - torch::log(q.sigma.clamp_min(kLogClamp));
  const torch::Tensor kl = 0.5 * (var_ratio + mean_term - 1.0) + log_term;
  if (kl.dim() == 0) return kl;
  if (kl.dim() == 1) return kl.sum();
  std::vector<int64_t> reduce_dims;
  for (int64_t d = 1; d < kl.dim(); ++d) reduce_dims.push_back(d);
  return kl.sum(reduce_dims).mean();
}

torch::Tensor categorical_ce(const torch::Tensor& logits, const torch::Tensor& target,
                             const torch::Tensor& weights) {
  if (logits.dim() != 4 || target.dim() != 3 || logits.size(0) != target.size(0) ||
      logits.size(2) != target.size(1) || logits.size(3) != target.size(2)) {
    std::ostringstream msg;
    msg << "categorical_ce: logits " << logits.sizes() << " incompatible with target "
        << target.sizes();
    throw ContractError(msg.str());
  }
  const torch::Tensor t = target.to(torch::kLong);
  const int64_t K = logits.size(1);
  if (t.numel() > 0 && (t.min().item<int64_t>() < 0 || t.max().item<int64_t>() >= K)) {
    throw ContractError("categorical_ce: target class outside [0, " + std::to_string(K) + ")");
  }
  const torch::Tensor nll = -torch::log_softmax(logits, 1).gather(1, t.unsqueeze(1)).squeeze(1);
  if (!weights.defined()) return nll.mean();
  if (weights.sizes() != target.sizes()) throw ContractError("categorical_ce: weight shape mismatch");
  const torch::Tensor w = weights.to(nll.scalar_type());
  return (nll * w).sum() / w.sum();
}

std::vector<torch::Tensor> deep_supervision_loss(const LogitPyramid& pyramid,
                                                 const torch::Tensor& target) {
  std::vector<torch::Tensor> out;
  for (std::size_t i = 1; i < pyramid.logits.size(); ++i) {
    out.push_back(categorical_ce(upsample_nearest(pyramid.logits[i], int64_t{1} << i), target));
  }
  return out;
}

LossBreakdown total_loss(const std::vector<GaussianParams>& posterior,
                         const std::vector<GaussianParams>& prior, const LogitPyramid& pyramid,
                         const torch::Tensor& target, const std::vector<double>& alpha) {
  const std::size_t L = posterior.size();
  if (prior.size() != L || pyramid.logits.size() != L || alpha.size() != L) {
    throw ContractError("total_loss: level counts differ (posterior " + std::to_string(L) +
                        ", prior " + std::to_string(prior.size()) + ", logits " +
                        std::to_string(pyramid.logits.size()) + ", alpha " +
                        std::to_string(alpha.size()) + ")");
  }
  LossBreakdown out;
  const double pixels = static_cast<double>(target.size(-2) * target.size(-1));
  const torch::Tensor recon = pixels * categorical_ce(pyramid.logits.front(), target);
  torch::Tensor total = recon;
  out.recon_ce = recon.item<double>();
  for (std::size_t i = 0; i < L; ++i) {
    const torch::Tensor kl = kl_diag_gaussian(posterior[i], prior[i]);
    out.kl.push_back(kl.item<double>());
    total = total + alpha[i] * kl;
  }
  for (const torch::Tensor& mean_ds : deep_supervision_loss(pyramid, target)) {
    const torch::Tensor ds = pixels * mean_ds;
    out.deep_sup_ce.push_back(ds.item<double>());
    total = total + ds;
  }
  out.total = total.item<double>();
  out.total_tensor = total;
  return out;
}

LossBreakdown deterministic_loss(const LogitPyramid& pyramid, const torch::Tensor& target) {
  if (pyramid.logits.size() != 1) throw ContractError("deterministic loss expects one output");
  LossBreakdown out;
  const double pixels = static_cast<double>(target.size(-2) * target.size(-1));
  out.total_tensor = pixels * categorical_ce(pyramid.logits.front(), target);
  out.recon_ce = out.total = out.total_tensor.item<double>();
  return out;
}

LossBreakdown model_loss(PHiSeg& model, const torch::Tensor& x, const torch::Tensor& s,
                         const std::vector<torch::Tensor>& posterior_noise) {
  if (model->deterministic()) return deterministic_loss(model->deterministic_forward(x), s);
  LevelOutputs post = model->posterior_forward(x, s, posterior_noise);
  LevelOutputs prior = model->prior_forward(x, {}, post.latents.z);
  const LogitPyramid pyramid = model->likelihood_forward(post.latents);
  return total_loss(post.params, prior.params, pyramid, s, model->config().alpha);
}

}  // namespace phiseg
