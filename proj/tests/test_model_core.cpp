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

#include <gtest/gtest.h>

#include <fstream>
#include <set>

#include "phiseg/checkpoint.hpp"
#include "phiseg/errors.hpp"
#include "phiseg/model.hpp"
#include "phiseg/train.hpp"
#include "support.hpp"

namespace phiseg {
namespace {

class ModelTest : public ::testing::Test {
 protected:
  void SetUp() override { configure_determinism(); }

  static ModelConfig tiny() { return make_model_config(3, 4, 16, 16, 4, 2, 3); }

  static torch::Tensor labels(int64_t b, int64_t rows, int64_t cols, int64_t k, uint64_t seed) {
    torch::Generator gen = make_generator(seed);
    return torch::randint(0, k, {b, rows, cols}, gen, torch::kLong);
  }
};

TEST_F(ModelTest, ReparamIdentityForStandardNormal) {
  const torch::Tensor noise = torch::randn({2, 2, 4, 4});
  GaussianParams g{torch::zeros({2, 2, 4, 4}), torch::ones({2, 2, 4, 4}), 0};
  EXPECT_TRUE(torch::equal(reparam_sample(g, noise), noise));
}

TEST_F(ModelTest, ReparamAtSigmaFloorStaysNearMean) {
  const auto f64 = torch::kFloat64;
  const torch::Tensor noise = torch::rand({1, 1, 5, 5}, f64) * 6.0 - 3.0;
  GaussianParams g{torch::randn({1, 1, 5, 5}, f64), torch::full({1, 1, 5, 5}, kSigmaFloor, f64), 0};
  const double bound = kSigmaFloor * noise.abs().max().item<double>();
  EXPECT_LE((reparam_sample(g, noise) - g.mu).abs().max().item<double>(), bound + 1e-12);
}

TEST_F(ModelTest, ReparamMomentsMatchMonteCarlo) {
  torch::Generator gen = make_generator(123);
  const int64_t n = 100000;
  const torch::Tensor noise = torch::randn({n}, gen, torch::kFloat64);
  GaussianParams g{torch::full({n}, 0.3, torch::kFloat64), torch::full({n}, 2.0, torch::kFloat64), 0};
  const torch::Tensor z = reparam_sample(g, noise);
  const double mean = z.mean().item<double>();
  const double sd = z.std().item<double>();
  const double se_mean = 2.0 / std::sqrt(static_cast<double>(n));
  const double se_sd = 2.0 / std::sqrt(2.0 * (n - 1));
  EXPECT_NEAR(mean, 0.3, 3 * se_mean);
  EXPECT_NEAR(sd, 2.0, 3 * se_sd);
}

TEST_F(ModelTest, ReparamIsLinearInNoise) {
  GaussianParams g{torch::randn({1, 2, 3, 3}, torch::kFloat64),
                   torch::rand({1, 2, 3, 3}, torch::kFloat64) + 0.1, 0};
  const torch::Tensor n1 = torch::randn({1, 2, 3, 3}, torch::kFloat64);
  const torch::Tensor n2 = torch::randn({1, 2, 3, 3}, torch::kFloat64);
  const torch::Tensor combo = 0.7 * n1 - 1.3 * n2;
  EXPECT_TRUE(torch::equal(reparam_sample(g, combo), g.mu + g.sigma * combo));
}

TEST_F(ModelTest, ReparamRejectsShapeMismatchAndIsDifferentiable) {
  GaussianParams g{torch::zeros({1, 1, 2, 2}, torch::requires_grad()),
                   torch::ones({1, 1, 2, 2}, torch::requires_grad()), 0};
  EXPECT_THROW(reparam_sample(g, torch::zeros({1, 1, 3, 3})), ContractError);
  const torch::Tensor noise = torch::full({1, 1, 2, 2}, 0.5);
  reparam_sample(g, noise).sum().backward();
  EXPECT_TRUE(torch::allclose(g.mu.grad(), torch::ones({1, 1, 2, 2})));
  EXPECT_TRUE(torch::allclose(g.sigma.grad(), noise));
}

TEST_F(ModelTest, PosteriorPriorAndLikelihoodFollowTheDyadicShapeLaw) {
  const ModelConfig c = tiny();
  PHiSeg model = build_model(c, 1);
  torch::Generator gen = make_generator(2);
  const torch::Tensor x = torch::randn({2, 1, 16, 16});
  const LevelOutputs post = model->posterior_forward(x, labels(2, 16, 16, 3, 3), sample_level_noise(c, 2, gen));
  const LevelOutputs prior = model->prior_forward(x, sample_level_noise(c, 2, gen));
  const LogitPyramid pyr = model->likelihood_forward(prior.latents);
  ASSERT_EQ(post.params.size(), 3u);
  ASSERT_EQ(prior.latents.z.size(), 3u);
  ASSERT_EQ(pyr.logits.size(), 3u);
  for (int i = 0; i < 3; ++i) {
    const std::vector<int64_t> lat = {2, 2, 16 >> i, 16 >> i};
    for (const LevelOutputs* o : {&post, &prior}) {
      EXPECT_EQ(o->params[i].mu.sizes(), lat);
      EXPECT_EQ(o->params[i].sigma.sizes(), lat);
      EXPECT_EQ(o->latents.z[i].sizes(), lat);
      EXPECT_GT(o->params[i].sigma.min().item<double>(), 0.0);
    }
    EXPECT_EQ(pyr.logits[i].sizes(), (std::vector<int64_t>{2, 3, 16 >> i, 16 >> i}));
  }
}

TEST_F(ModelTest, FrozenForwardPassesAreBitIdentical) {
  const ModelConfig c = tiny();
  PHiSeg model = build_model(c, 4);
  model->eval();
  torch::NoGradGuard guard;
  const torch::Tensor x = torch::randn({1, 1, 16, 16});
  const torch::Tensor s = labels(1, 16, 16, 3, 5);
  const auto noise = zero_level_noise(c, 1);
  const LevelOutputs a = model->posterior_forward(x, s, noise);
  const LevelOutputs b = model->posterior_forward(x, s, noise);
  for (int i = 0; i < 3; ++i) {
    EXPECT_TRUE(torch::equal(a.params[i].mu, b.params[i].mu));
    EXPECT_TRUE(torch::equal(a.params[i].sigma, b.params[i].sigma));
  }
  const LogitPyramid p1 = model->likelihood_forward(model->prior_forward(x, noise).latents);
  const LogitPyramid p2 = model->likelihood_forward(model->prior_forward(x, noise).latents);
  EXPECT_TRUE(torch::equal(p1.logits[0], p2.logits[0]));
}

TEST_F(ModelTest, PosteriorIsSensitiveToTheMask) {
  const ModelConfig c = tiny();
  PHiSeg model = build_model(c, 6);
  model->eval();
  torch::NoGradGuard guard;
  const torch::Tensor x = torch::randn({1, 1, 16, 16});
  torch::Tensor s = labels(1, 16, 16, 3, 7);
  const auto noise = zero_level_noise(c, 1);
  const torch::Tensor mu = model->posterior_forward(x, s, noise).params[0].mu;
  s.index_put_({0, 5, 5}, (s.index({0, 5, 5}).item<int64_t>() + 1) % 3);
  const torch::Tensor mu2 = model->posterior_forward(x, s, noise).params[0].mu;
  EXPECT_GT((mu - mu2).abs().max().item<double>(), 0.0);
}

TEST_F(ModelTest, ZeroNoiseSamplesTheMean) {
  const ModelConfig c = tiny();
  PHiSeg model = build_model(c, 8);
  const LevelOutputs prior = model->prior_forward(torch::randn({1, 1, 16, 16}), zero_level_noise(c, 1));
  for (int i = 0; i < 3; ++i) EXPECT_TRUE(torch::equal(prior.latents.z[i], prior.params[i].mu));
}

TEST_F(ModelTest, InjectedLatentsReplaceSamplesAndAreShapeChecked) {
  const ModelConfig c = tiny();
  PHiSeg model = build_model(c, 9);
  torch::Generator gen = make_generator(1);
  const torch::Tensor x = torch::randn({1, 1, 16, 16});
  std::vector<torch::Tensor> inj(3);
  inj[1] = torch::randn({1, 2, 8, 8});
  const LevelOutputs out = model->prior_forward(x, sample_level_noise(c, 1, gen), inj);
  EXPECT_TRUE(torch::equal(out.latents.z[1], inj[1]));
  inj[1] = torch::randn({1, 2, 4, 4});
  EXPECT_THROW(model->prior_forward(x, sample_level_noise(c, 1, gen), inj), ContractError);
}

TEST_F(ModelTest, DistinctNoiseGivesDistinctLatentsAndDecodes) {
  const ModelConfig c = tiny();
  PHiSeg model = build_model(c, 10);
  model->eval();
  torch::NoGradGuard guard;
  torch::Generator gen = make_generator(11);
  const torch::Tensor x = torch::randn({1, 1, 16, 16});
  const LevelOutputs a = model->prior_forward(x, sample_level_noise(c, 1, gen));
  const LevelOutputs b = model->prior_forward(x, sample_level_noise(c, 1, gen));
  EXPECT_FALSE(torch::equal(a.latents.z[0], b.latents.z[0]));
  EXPECT_FALSE(torch::equal(model->likelihood_forward(a.latents).logits[0],
                            model->likelihood_forward(b.latents).logits[0]));
}

TEST_F(ModelTest, ZeroedResidualHeadGivesExactUpsample) {
  const ModelConfig c = tiny();
  PHiSeg model = build_model(c, 12);
  model->eval();
  torch::NoGradGuard guard;
  for (int level = 0; level < 2; ++level) {
    torch::nn::Conv2d head = model->likelihood()->output_head(level);
    head->weight.zero_();
    if (head->bias.defined()) head->bias.zero_();
  }
  torch::Generator gen = make_generator(13);
  const LevelOutputs prior = model->prior_forward(torch::randn({1, 1, 16, 16}), sample_level_noise(c, 1, gen));
  const LogitPyramid pyr = model->likelihood_forward(prior.latents);
  for (int level = 0; level < 2; ++level) {
    EXPECT_TRUE(torch::equal(pyr.logits[level], upsample_nearest(pyr.logits[level + 1], 2)));
  }
}

TEST_F(ModelTest, LikelihoodRejectsWrongPyramidLength) {
  const ModelConfig c = tiny();
  PHiSeg model = build_model(c, 14);
  LatentPyramid z;
  z.z = {torch::zeros({1, 2, 16, 16})};
  EXPECT_THROW(model->likelihood_forward(z), ContractError);
}

TEST_F(ModelTest, SameSeedGivesSameChecksumAndDifferentSeedDoesNot) {
  const ModelConfig c = tiny();
  EXPECT_EQ(parameter_checksum(*build_model(c, 21)), parameter_checksum(*build_model(c, 21)));
  EXPECT_NE(parameter_checksum(*build_model(c, 21)), parameter_checksum(*build_model(c, 22)));
}

TEST_F(ModelTest, ReferenceSevenLevelFiveLatentConfigBuilds) {
  const ModelConfig c = make_model_config(5, 7, 64, 64, 8);
  EXPECT_NO_THROW(build_model(c, 1));
}

TEST_F(ModelTest, FewerLatentLevelsMeansFewerParameters) {
  const int64_t l1 = parameter_count(*build_model(make_model_config(1, 6, 64, 64, 8), 1));
  const int64_t l5 = parameter_count(*build_model(make_model_config(5, 6, 64, 64, 8), 1));
  EXPECT_LT(l1, l5);
}

TEST_F(ModelTest, PriorAndPosteriorShareStructureButNoStorage) {
  PHiSeg model = build_model(tiny(), 15);
  const auto post = model->posterior()->named_parameters();
  const auto prior = model->prior()->named_parameters();
  ASSERT_EQ(post.size(), prior.size());
  std::set<const void*> prior_storage;
  for (const auto& p : prior) prior_storage.insert(p.value().data_ptr());
  for (const auto& p : post) {
    ASSERT_TRUE(prior.contains(p.key())) << p.key();
    EXPECT_FALSE(prior_storage.count(p.value().data_ptr())) << p.key();
    // Only the first convolution differs, by the one-hot mask channels.
    if (p.value().sizes() != prior[p.key()].sizes()) {
      EXPECT_EQ(p.value().size(1), prior[p.key()].size(1) + 3) << p.key();
    }
  }
}

TEST_F(ModelTest, InvalidConfigsAreRejected) {
  ModelConfig c = tiny();
  c.latent_levels = 5;  // > R
  EXPECT_THROW(build_model(c, 1), ConfigError);
  c = tiny();
  c.rows = 12;  // not divisible by 8
  EXPECT_THROW(build_model(c, 1), ConfigError);
  c = tiny();
  c.alpha[0] = 0.0;
  EXPECT_THROW(build_model(c, 1), ConfigError);
  c = tiny();
  c.num_classes = 1;
  EXPECT_THROW(build_model(c, 1), ConfigError);
}

TEST_F(ModelTest, DefaultScheduleValues) {
  EXPECT_EQ(default_alpha(5), (std::vector<double>{1, 2, 4, 8, 16}));
  EXPECT_EQ(default_channels(8, 7), (std::vector<int>{8, 16, 32, 48, 48, 48, 48}));
}

TEST_F(ModelTest, DeterministicBaselineHasNoLatentPath) {
  ModelConfig c = tiny();
  c.deterministic = true;
  PHiSeg model = build_model(c, 16);
  const torch::Tensor x = torch::randn({2, 1, 16, 16});
  const LogitPyramid out = model->deterministic_forward(x);
  ASSERT_EQ(out.logits.size(), 1u);
  EXPECT_EQ(out.logits[0].sizes(), (std::vector<int64_t>{2, 3, 16, 16}));
  EXPECT_THROW(model->prior_forward(x, zero_level_noise(c, 2)), ContractError);
}

TEST_F(ModelTest, CheckpointRoundTripPreservesOutputs) {
  testing::ScratchDir dir("ckpt");
  const ModelConfig c = tiny();
  PHiSeg model = build_model(c, 17);
  // Move the batch-norm statistics away from their defaults.
  model->train();
  torch::Generator gen = make_generator(1);
  model->prior_forward(torch::randn({4, 1, 16, 16}), sample_level_noise(c, 4, gen));
  save_weights(dir / "m.ckpt", model, {{"note", "x"}});

  LoadedWeights loaded = load_weights(dir / "m.ckpt", c);
  EXPECT_EQ(loaded.metadata["note"], "x");
  EXPECT_EQ(parameter_checksum(*loaded.model), parameter_checksum(*model));
  model->eval();
  loaded.model->eval();
  torch::NoGradGuard guard;
  const torch::Tensor x = torch::randn({1, 1, 16, 16});
  const auto noise = zero_level_noise(c, 1);
  EXPECT_TRUE(torch::equal(model->prior_forward(x, noise).params[0].mu,
                           loaded.model->prior_forward(x, noise).params[0].mu));
}

TEST_F(ModelTest, CheckpointConfigMismatchAndCorruptionAreDetected) {
  testing::ScratchDir dir("ckpt_bad");
  PHiSeg model = build_model(tiny(), 18);
  save_weights(dir / "m.ckpt", model);
  ModelConfig other = tiny();
  other.latent_channels = 1;
  EXPECT_THROW(load_weights(dir / "m.ckpt", other), DimensionMismatch);
  std::ofstream(dir / "junk.ckpt") << "junk";
  EXPECT_THROW(load_weights(dir / "junk.ckpt"), IoError);
  std::filesystem::resize_file(dir / "m.ckpt", std::filesystem::file_size(dir / "m.ckpt") / 2);
  EXPECT_THROW(load_weights(dir / "m.ckpt"), IoError);
}

}  // namespace
}  // namespace phiseg
