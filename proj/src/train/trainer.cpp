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
#include <fstream>
#include <limits>
#include <sstream>
#include <stdexcept>

#include "phiseg/checkpoint.hpp"
#include "phiseg/elbo.hpp"
#include "phiseg/errors.hpp"
#include "phiseg/rng.hpp"
#include "phiseg/train.hpp"

namespace phiseg {

namespace {

constexpr std::uint64_t kInitStream = 0x1417;
constexpr std::uint64_t kBatchStream = 0xBA7C;
constexpr std::uint64_t kNoiseStream = 0x2015E;
constexpr std::uint64_t kValidationNoiseSeed = 0x7A11D;

using json = nlohmann::json;

std::map<std::string, torch::Tensor> snapshot(PHiSeg& model) {
  std::map<std::string, torch::Tensor> out;
  for (const auto& p : model->named_parameters()) out.emplace(p.key(), p.value().detach().clone());
  for (const auto& b : model->named_buffers()) out.emplace(b.key(), b.value().detach().clone());
  return out;
}

void restore(PHiSeg& model, const std::map<std::string, torch::Tensor>& state) {
  torch::NoGradGuard no_grad;
  for (auto& p : model->named_parameters()) p.value().copy_(state.at(p.key()));
  for (auto& b : model->named_buffers()) b.value().copy_(state.at(b.key()));
}

double objective(const LossBreakdown& loss, const std::vector<double>& alpha, bool elbo_only) {
  if (!elbo_only) return loss.total;
  double v = loss.recon_ce;
  for (std::size_t i = 0; i < loss.kl.size(); ++i) v += alpha[i] * loss.kl[i];
  return v;
}

json train_record(long step, const LossBreakdown& loss, bool deterministic) {
  json r;
  r["step"] = step;
  r["phase"] = "train";
  r["norm"] = "batch";
  r["recon_ce"] = loss.recon_ce;
  if (!deterministic) {
    r["kl"] = loss.kl;
    r["deep_sup_ce"] = loss.deep_sup_ce;
  }
  r["total"] = loss.total;
  return r;
}

void check_single_draw(const std::vector<int64_t>& before, const std::vector<int64_t>& after,
                       long step) {
  for (std::size_t i = 0; i < before.size(); ++i) {
    if (after[i] != before[i] + 1) {
      throw std::logic_error("step " + std::to_string(step) + ": posterior level " +
                             std::to_string(i) + " drew " + std::to_string(after[i] - before[i]) +
                             " samples, expected exactly 1");
    }
  }
}

}  // namespace

void TrainConfig::validate() const {
  model.validate();
  if (!(learning_rate > 0.0) || !std::isfinite(learning_rate)) {
    throw ConfigError("train config: learning_rate must be positive");
  }
  if (batch_size < 1) throw ConfigError("train config: batch_size must be >= 1");
  if (max_steps < 0) throw ConfigError("train config: max_steps must be >= 0");
  if (val_interval < 1) throw ConfigError("train config: val_interval must be >= 1");
  if (policy.kind == AnnotatorPolicy::Kind::kFixed && policy.annotator < 0) {
    throw ConfigError("train config: fixed annotator index must be >= 0");
  }
}

json to_json(const TrainConfig& c) {
  return {{"model", to_json(c.model)},
          {"learning_rate", c.learning_rate},
          {"batch_size", c.batch_size},
          {"max_steps", c.max_steps},
          {"val_interval", c.val_interval},
          {"policy", c.policy.str()},
          {"seed", c.seed},
          {"checkpoint_dir", c.checkpoint_dir.string()},
          {"elbo_only_validation", c.elbo_only_validation}};
}

TrainConfig train_config_from_json(const json& j, const TrainConfig& base) {
  if (!j.is_object()) throw ConfigError("train config must be a JSON object");
  TrainConfig c = base;
  try {
    for (const auto& [key, value] : j.items()) {
      if (key == "model") {
        c.model = model_config_from_json(value);
      } else if (key == "learning_rate") {
        c.learning_rate = value.get<double>();
      } else if (key == "batch_size") {
        c.batch_size = value.get<int>();
      } else if (key == "max_steps") {
        c.max_steps = value.get<long>();
      } else if (key == "val_interval") {
        c.val_interval = value.get<long>();
      } else if (key == "policy") {
        c.policy = AnnotatorPolicy::parse(value.get<std::string>());
      } else if (key == "seed") {
        c.seed = value.get<std::uint64_t>();
      } else if (key == "checkpoint_dir") {
        c.checkpoint_dir = value.get<std::string>();
      } else if (key == "elbo_only_validation") {
        c.elbo_only_validation = value.get<bool>();
      } else {
        throw ConfigError("train config: unknown key '" + key + "'");
      }
    }
  } catch (const json::exception& e) {
    throw ConfigError(std::string("train config: ") + e.what());
  }
  c.validate();
  return c;
}

double validation_loss(PHiSeg& model, const Dataset& dataset, const AnnotatorPolicy& policy,
                       int batch_size, bool elbo_only) {
  std::vector<std::size_t> cases;
  std::vector<int> annotators;
  for (std::size_t idx : dataset.indices(Split::kVal)) {
    if (policy.kind == AnnotatorPolicy::Kind::kFixed) {
      if (policy.annotator >= dataset.num_annotators()) {
        throw ContractError("annotator index " + std::to_string(policy.annotator) +
                            " out of range");
      }
      cases.push_back(idx);
      annotators.push_back(policy.annotator);
    } else {
      for (int m = 0; m < dataset.num_annotators(); ++m) {
        cases.push_back(idx);
        annotators.push_back(m);
      }
    }
  }
  if (cases.empty()) throw ContractError("validation split is empty");

  const bool was_training = model->is_training();
  model->eval();
  torch::NoGradGuard no_grad;
  torch::Generator gen = make_generator(kValidationNoiseSeed);
  double sum = 0.0;
  for (std::size_t start = 0; start < cases.size(); start += batch_size) {
    const std::size_t end = std::min(cases.size(), start + batch_size);
    const std::vector<std::size_t> idx(cases.begin() + start, cases.begin() + end);
    const std::vector<int> ann(annotators.begin() + start, annotators.begin() + end);
    const Batch batch = make_batch(dataset, idx, ann);
    const torch::Tensor x = images_to_tensor(batch.images, batch.size(), batch.rows, batch.cols);
    const torch::Tensor s = masks_to_tensor(batch.masks, batch.size(), batch.rows, batch.cols);
    std::vector<torch::Tensor> noise;
    if (!model->deterministic()) noise = sample_level_noise(model->config(), batch.size(), gen);
    const LossBreakdown loss = model_loss(model, x, s, noise);
    sum += objective(loss, model->config().alpha, elbo_only) * batch.size();
  }
  model->train(was_training);
  return sum / static_cast<double>(cases.size());
}

TrainResult train(const TrainConfig& config, const Dataset& dataset) {
  config.validate();
  if (dataset.rows() != config.model.rows || dataset.cols() != config.model.cols ||
      dataset.num_classes() != config.model.num_classes) {
    throw DimensionMismatch("dataset is " + std::to_string(dataset.rows()) + "x" +
                            std::to_string(dataset.cols()) + " with K=" +
                            std::to_string(dataset.num_classes()) +
                            " but the model expects " + std::to_string(config.model.rows) + "x" +
                            std::to_string(config.model.cols) + " with K=" +
                            std::to_string(config.model.num_classes));
  }
  if (config.policy.kind == AnnotatorPolicy::Kind::kFixed &&
      config.policy.annotator >= dataset.num_annotators()) {
    throw ConfigError("train config: annotator " + std::to_string(config.policy.annotator) +
                      " does not exist");
  }

  std::ofstream log_file;
  if (!config.checkpoint_dir.empty()) {
    std::filesystem::create_directories(config.checkpoint_dir);
    log_file.open(config.checkpoint_dir / "train_log.jsonl", std::ios::trunc);
    if (!log_file) throw IoError("cannot write " + (config.checkpoint_dir / "train_log.jsonl").string());
  }

  TrainResult result;
  const auto emit = [&](const json& record) {
    result.log.push_back(record.dump());
    if (log_file.is_open()) log_file << result.log.back() << '\n' << std::flush;
  };

  PHiSeg model = build_model(config.model, derive_seed(config.seed, {kInitStream}));
  model->train();
  torch::optim::Adam optimizer(model->parameters(), torch::optim::AdamOptions(config.learning_rate)
                                                        .betas({0.9, 0.999})
                                                        .eps(1e-8)
                                                        .weight_decay(0.0));
  BatchIterator batches(dataset, Split::kTrain, config.batch_size, config.policy,
                        derive_seed(config.seed, {kBatchStream}));
  torch::Generator gen = make_generator(derive_seed(config.seed, {kNoiseStream}));

  double best_loss = std::numeric_limits<double>::infinity();
  long best_step = 0;
  std::map<std::string, torch::Tensor> best_state;

  const auto validate_now = [&](long step) {
    const double v = validation_loss(model, dataset, config.policy, config.batch_size,
                                     config.elbo_only_validation);
    if (!std::isfinite(v)) throw DivergenceError("non-finite validation loss", step);
    result.validation.push_back({step, v});
    const bool improved = v < best_loss;
    emit({{"step", step}, {"phase", "val"}, {"norm", "frozen"}, {"total", v}, {"best", improved}});
    if (!improved) return;
    best_loss = v;
    best_step = step;
    best_state = snapshot(model);
    if (!config.checkpoint_dir.empty()) {
      Checkpoint ckpt{model, step, v, config};
      save_checkpoint(config.checkpoint_dir / "best.ckpt", ckpt);
    }
  };

  validate_now(0);
  for (long step = 1; step <= config.max_steps; ++step) {
    const Batch batch = batches.next();
    const torch::Tensor x = images_to_tensor(batch.images, batch.size(), batch.rows, batch.cols);
    const torch::Tensor s = masks_to_tensor(batch.masks, batch.size(), batch.rows, batch.cols);

    optimizer.zero_grad();
    LossBreakdown loss;
    if (model->deterministic()) {
      loss = model_loss(model, x, s, {});
    } else {
      const std::vector<int64_t> before = model->posterior_draws();
      loss = model_loss(model, x, s, sample_level_noise(config.model, batch.size(), gen));
      check_single_draw(before, model->posterior_draws(), step);
    }
    if (!std::isfinite(loss.total)) {
      emit(train_record(step, loss, model->deterministic()));
      throw DivergenceError("non-finite training loss at step " + std::to_string(step), step);
    }
    loss.total_tensor.backward();
    optimizer.step();
    emit(train_record(step, loss, model->deterministic()));

    if (step % config.val_interval == 0 || step == config.max_steps) validate_now(step);
  }

  restore(model, best_state);
  model->eval();
  result.best = Checkpoint{model, best_step, best_loss, config};
  return result;
}

void save_checkpoint(const std::filesystem::path& path, const Checkpoint& ckpt) {
  json meta;
  meta["step"] = ckpt.step;
  meta["val_loss"] = ckpt.val_loss;
  meta["train"] = to_json(ckpt.config);
  PHiSeg model = ckpt.model;
  save_weights(path, model, meta);
}

Checkpoint load_checkpoint(const std::filesystem::path& path) {
  LoadedWeights w = load_weights(path);
  Checkpoint out;
  out.model = w.model;
  out.model->eval();
  try {
    out.step = w.metadata.at("step").get<long>();
    out.val_loss = w.metadata.at("val_loss").get<double>();
    out.config = train_config_from_json(w.metadata.at("train"));
  } catch (const json::exception& e) {
    throw IoError("checkpoint " + path.string() + " lacks training metadata: " + e.what());
  } catch (const ConfigError& e) {
    throw IoError("checkpoint " + path.string() + " has an invalid training record: " + e.what());
  }
  if (!(out.config.model == w.model->config())) {
    throw DimensionMismatch("checkpoint training record disagrees with its weights");
  }
  return out;
}

}  // namespace phiseg
