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

#include <Eigen/Dense>
#include <cmath>
#include <string>

#include "phiseg/elbo.hpp"
#include "phiseg/errors.hpp"

namespace phiseg {

namespace {

void check_chain(const LinearGaussianChain& c, std::size_t L, const char* name) {
  if (c.scale.size() != L || c.offset.size() != L || c.variance.size() != L) {
    throw ContractError(std::string("chain ") + name + ": coefficient vectors must have length L");
  }
  for (double v : c.variance) {
    if (!(v > 0.0)) throw ContractError(std::string("chain ") + name + ": variances must be > 0");
  }
}

// z = scale-coupling * z + offset + noise  =>  z = M (offset + noise),
// M = (I - B)^-1 with B(l, l+1) = scale[l].
void joint_moments(const LinearGaussianChain& c, Eigen::VectorXd& mean, Eigen::MatrixXd& cov) {
  const auto L = static_cast<Eigen::Index>(c.offset.size());
  Eigen::MatrixXd B = Eigen::MatrixXd::Zero(L, L);
  for (Eigen::Index l = 0; l + 1 < L; ++l) B(l, l + 1) = c.scale[l];
  const Eigen::MatrixXd M = (Eigen::MatrixXd::Identity(L, L) - B).inverse();
  const Eigen::VectorXd b = Eigen::Map<const Eigen::VectorXd>(c.offset.data(), L);
  const Eigen::VectorXd v = Eigen::Map<const Eigen::VectorXd>(c.variance.data(), L);
  mean = M * b;
  cov = M * v.asDiagonal() * M.transpose();
}

double gaussian_kl_1d(double mq, double vq, double mp, double vp) {
  return 0.5 * (vq / vp + (mp - mq) * (mp - mq) / vp - 1.0 + std::log(vp) - std::log(vq));
}

}  // namespace

ChainKlReport verify_kl_chain_decomposition(const LinearGaussianChainSpec& spec) {
  const std::size_t L = spec.q.offset.size();
  if (L < 1 || L > 4) throw ContractError("verify_kl_chain_decomposition: need 1 <= L <= 4");
  check_chain(spec.q, L, "q");
  check_chain(spec.p, L, "p");

  ChainKlReport report;

  // Joint route.
  Eigen::VectorXd mq, mp;
  Eigen::MatrixXd cq, cp;
  joint_moments(spec.q, mq, cq);
  joint_moments(spec.p, mp, cp);
  const Eigen::LLT<Eigen::MatrixXd> chol_p(cp);
  const Eigen::LLT<Eigen::MatrixXd> chol_q(cq);
  const Eigen::VectorXd diff = mp - mq;
  const double trace_term = chol_p.solve(cq).trace();
  const double quad_term = diff.dot(chol_p.solve(diff));
  const auto log_det = [](const Eigen::LLT<Eigen::MatrixXd>& llt) {
    return 2.0 * llt.matrixL().toDenseMatrix().diagonal().array().log().sum();
  };
  report.lhs = 0.5 * (trace_term + quad_term - static_cast<double>(L) + log_det(chol_p) -
                      log_det(chol_q));

  // Level-wise route: top KL plus expected conditional KLs under q's marginals.
  const std::size_t top = L - 1;
  double rhs = gaussian_kl_1d(spec.q.offset[top], spec.q.variance[top], spec.p.offset[top],
                              spec.p.variance[top]);
  double m_above = spec.q.offset[top];  // marginal of z_{l+1} under q
  double v_above = spec.q.variance[top];
  for (std::size_t step = 1; step < L; ++step) {
    const std::size_t l = top - step;
    const double vq = spec.q.variance[l], vp = spec.p.variance[l];
    const double c = spec.p.scale[l] - spec.q.scale[l];
    const double d = spec.p.offset[l] - spec.q.offset[l];
    const double expected_sq = c * c * (v_above + m_above * m_above) + 2.0 * c * d * m_above + d * d;
    rhs += 0.5 * (vq / vp + expected_sq / vp - 1.0 + std::log(vp) - std::log(vq));
    const double m = spec.q.scale[l] * m_above + spec.q.offset[l];
    const double v = spec.q.scale[l] * spec.q.scale[l] * v_above + vq;
    m_above = m;
    v_above = v;
  }
  report.rhs = rhs;
  report.abs_diff = std::abs(report.lhs - report.rhs);
  return report;
}

}  // namespace phiseg
