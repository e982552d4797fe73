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

#include "phiseg/data.hpp"
#include "phiseg/errors.hpp"
#include "phiseg/rng.hpp"

namespace phiseg {

std::string AnnotatorPolicy::str() const {
  return kind == Kind::kRandomPerImage ? "random" : "fixed:" + std::to_string(annotator);
}

AnnotatorPolicy AnnotatorPolicy::parse(const std::string& text) {
  if (text == "random") return random_per_image();
  if (text.rfind("fixed:", 0) == 0) {
    try {
      std::size_t used = 0;
      const int m = std::stoi(text.substr(6), &used);
      if (used == text.size() - 6 && m >= 0) return fixed(m);
    } catch (const std::exception&) {
    }
  }
  throw ConfigError("annotator policy must be 'random' or 'fixed:<m>', got '" + text + "'");
}

Batch make_batch(const Dataset& dataset, const std::vector<std::size_t>& case_indices,
                 const std::vector<int>& annotator_ids) {
  if (case_indices.size() != annotator_ids.size()) {
    throw ContractError("make_batch: one annotator id per case required");
  }
  Batch b;
  b.rows = dataset.rows();
  b.cols = dataset.cols();
  b.case_indices = case_indices;
  b.annotator_ids = annotator_ids;
  const std::size_t plane = static_cast<std::size_t>(b.rows) * b.cols;
  b.images.reserve(plane * case_indices.size());
  b.masks.reserve(plane * case_indices.size());
  for (std::size_t i = 0; i < case_indices.size(); ++i) {
    const Case& c = dataset.cases().at(case_indices[i]);
    const int m = annotator_ids[i];
    if (m < 0 || m >= static_cast<int>(c.annotations.size())) {
      throw ContractError("annotator index " + std::to_string(m) + " out of range");
    }
    b.images.insert(b.images.end(), c.image.begin(), c.image.end());
    const auto& mask = c.annotations[m].values;
    b.masks.insert(b.masks.end(), mask.begin(), mask.end());
  }
  return b;
}

BatchIterator::BatchIterator(const Dataset& dataset, Split split, int batch_size,
                             AnnotatorPolicy policy, std::uint64_t seed)
    : dataset_(&dataset),
      order_(dataset.indices(split)),
      batch_size_(batch_size),
      policy_(policy),
      seed_(seed) {
  if (order_.empty()) throw ContractError("split '" + to_string(split) + "' has no cases");
  if (batch_size < 1) throw ContractError("batch size must be >= 1");
  if (policy.kind == AnnotatorPolicy::Kind::kFixed &&
      (policy.annotator < 0 || policy.annotator >= dataset.num_annotators())) {
    throw ContractError("fixed annotator " + std::to_string(policy.annotator) +
                        " out of range for " + std::to_string(dataset.num_annotators()) +
                        " annotators");
  }
  reshuffle();
}

void BatchIterator::reshuffle() {
  std::sort(order_.begin(), order_.end());
  Rng rng(derive_seed(seed_, {0xE90Cu, static_cast<std::uint64_t>(epoch_)}));
  rng.shuffle(order_.begin(), order_.end());
  cursor_ = 0;
}

std::size_t BatchIterator::batches_per_epoch() const {
  return (order_.size() + batch_size_ - 1) / batch_size_;
}

Batch BatchIterator::next() {
  if (cursor_ >= order_.size()) {
    ++epoch_;
    reshuffle();
  }
  const std::size_t end = std::min(order_.size(), cursor_ + static_cast<std::size_t>(batch_size_));
  std::vector<std::size_t> cases(order_.begin() + cursor_, order_.begin() + end);
  cursor_ = end;

  std::vector<int> annotators;
  annotators.reserve(cases.size());
  for (std::size_t i = 0; i < cases.size(); ++i) {
    if (policy_.kind == AnnotatorPolicy::Kind::kFixed) {
      annotators.push_back(policy_.annotator);
    } else {
      Rng rng(derive_seed(seed_, {0xA770u, draws_++}));
      const auto m = static_cast<int>(rng.below(dataset_->cases()[cases[i]].annotations.size()));
      annotators.push_back(m);
    }
  }
  return make_batch(*dataset_, cases, annotators);
}

}  // namespace phiseg
