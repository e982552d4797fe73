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

#include <fstream>

#include "../core/binary_io.hpp"
#include "phiseg/data.hpp"
#include "phiseg/errors.hpp"

namespace phiseg {

namespace fs = std::filesystem;

namespace {

fs::path image_path(const fs::path& root, const std::string& id) {
  return root / "cases" / (id + ".image.f32");
}

fs::path annotation_path(const fs::path& root, const std::string& id, std::size_t m) {
  return root / "cases" / (id + ".ann" + std::to_string(m) + ".u8");
}

void write_case(const fs::path& root, const Case& c) {
  {
    std::ofstream out(image_path(root, c.id), std::ios::binary | std::ios::trunc);
    if (!out) throw IoError("cannot write image for " + c.id);
    detail::write_le_span<float>(out, c.image);
    if (!out) throw IoError("failed writing image for " + c.id);
  }
  for (std::size_t m = 0; m < c.annotations.size(); ++m) {
    std::ofstream out(annotation_path(root, c.id, m), std::ios::binary | std::ios::trunc);
    if (!out) throw IoError("cannot write annotation for " + c.id);
    detail::write_le_span<std::uint8_t>(out, c.annotations[m].values);
    if (!out) throw IoError("failed writing annotation for " + c.id);
  }
}

void read_case_payload(const fs::path& root, Case& c, int num_annotators) {
  const std::size_t n = static_cast<std::size_t>(c.rows) * c.cols;
  {
    std::ifstream in(image_path(root, c.id), std::ios::binary);
    if (!in) throw IoError("missing image file for " + c.id);
    c.image.resize(n);
    detail::read_le_span<float>(in, c.image, "image of " + c.id);
  }
  for (int m = 0; m < num_annotators; ++m) {
    std::ifstream in(annotation_path(root, c.id, m), std::ios::binary);
    if (!in) throw IoError("missing annotation " + std::to_string(m) + " for " + c.id);
    LabelMap lm(c.rows, c.cols);
    detail::read_le_span<std::uint8_t>(in, lm.values, "annotation of " + c.id);
    c.annotations.push_back(std::move(lm));
  }
}

}  // namespace

std::string to_string(Split split) {
  switch (split) {
    case Split::kTrain:
      return "train";
    case Split::kVal:
      return "val";
    case Split::kTest:
      return "test";
  }
  return "train";
}

Split split_from_string(const std::string& name) {
  if (name == "train") return Split::kTrain;
  if (name == "val") return Split::kVal;
  if (name == "test") return Split::kTest;
  throw ConfigError("unknown split '" + name + "'");
}

void Dataset::write_manifest() const {
  nlohmann::json cases = nlohmann::json::array();
  for (const Case& c : cases_) cases.push_back({{"id", c.id}, {"split", to_string(c.split)}});
  const nlohmann::json manifest = {
      {"format_version", kDatasetFormatVersion},
      {"rows", rows_},
      {"cols", cols_},
      {"num_classes", num_classes_},
      {"num_annotators", num_annotators_},
      {"spec", spec_echo_},
      {"cases", cases},
  };
  std::ofstream out(root_ / "manifest.json", std::ios::trunc);
  if (!out) throw IoError("cannot write manifest in " + root_.string());
  out << manifest.dump(2) << '\n';
  if (!out) throw IoError("failed writing manifest in " + root_.string());
}

Dataset Dataset::load(const fs::path& root) {
  std::ifstream in(root / "manifest.json");
  if (!in) throw IoError("no dataset manifest in " + root.string());
  nlohmann::json manifest;
  try {
    manifest = nlohmann::json::parse(in);
  } catch (const nlohmann::json::exception& e) {
    throw IoError("unreadable manifest in " + root.string() + ": " + e.what());
  }
  Dataset ds;
  ds.root_ = root;
  try {
    const int version = manifest.at("format_version").get<int>();
    if (version != kDatasetFormatVersion) {
      throw IoError("unsupported dataset format version " + std::to_string(version));
    }
    ds.rows_ = manifest.at("rows").get<int>();
    ds.cols_ = manifest.at("cols").get<int>();
    ds.num_classes_ = manifest.at("num_classes").get<int>();
    ds.num_annotators_ = manifest.at("num_annotators").get<int>();
    ds.spec_echo_ = manifest.value("spec", nlohmann::json::object());
    for (const auto& entry : manifest.at("cases")) {
      Case c;
      c.id = entry.at("id").get<std::string>();
      c.split = split_from_string(entry.at("split").get<std::string>());
      c.rows = ds.rows_;
      c.cols = ds.cols_;
      read_case_payload(root, c, ds.num_annotators_);
      for (const LabelMap& lm : c.annotations) lm.validate(ds.num_classes_);
      ds.cases_.push_back(std::move(c));
    }
  } catch (const nlohmann::json::exception& e) {
    throw IoError("malformed manifest in " + root.string() + ": " + e.what());
  } catch (const ContractError& e) {
    throw IoError("invalid annotation data in " + root.string() + ": " + e.what());
  }
  return ds;
}

std::vector<std::size_t> Dataset::indices(Split split) const {
  std::vector<std::size_t> out;
  for (std::size_t i = 0; i < cases_.size(); ++i) {
    if (cases_[i].split == split) out.push_back(i);
  }
  return out;
}

const Case& Dataset::find(const std::string& id) const {
  for (const Case& c : cases_) {
    if (c.id == id) return c;
  }
  throw ContractError("no case with id '" + id + "'");
}

void Dataset::resplit(const std::array<double, 3>& ratios, std::uint64_t seed) {
  const auto splits = split_cases(cases_.size(), ratios, seed);
  for (std::size_t i = 0; i < cases_.size(); ++i) cases_[i].split = splits[i];
  write_manifest();
}

void generate_dataset(const SynthSpec& spec, const fs::path& dir, bool force) {
  spec.validate();
  std::error_code ec;
  if (fs::exists(dir, ec) && !fs::is_empty(dir, ec)) {
    if (!force) throw IoError(dir.string() + " exists and is not empty (use --force)");
    fs::remove_all(dir / "cases", ec);
    fs::remove(dir / "manifest.json", ec);
  }
  fs::create_directories(dir / "cases", ec);
  if (ec) throw IoError("cannot create " + (dir / "cases").string() + ": " + ec.message());

  Dataset ds;
  ds.root_ = dir;
  ds.rows_ = spec.rows;
  ds.cols_ = spec.cols;
  ds.num_classes_ = spec.num_classes;
  ds.num_annotators_ = static_cast<int>(spec.annotators.size());
  ds.spec_echo_ = to_json(spec);
  const auto splits =
      split_cases(static_cast<std::size_t>(spec.num_cases), spec.split_ratios, spec.seed);
  for (int i = 0; i < spec.num_cases; ++i) {
    Case c = synthesize_case(spec, i);
    c.split = splits[i];
    write_case(dir, c);
    ds.cases_.push_back(std::move(c));
  }
  ds.write_manifest();
}

}  // namespace phiseg
