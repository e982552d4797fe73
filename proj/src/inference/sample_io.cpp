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
#include "phiseg/errors.hpp"
#include "phiseg/samples.hpp"

namespace phiseg {

namespace {
constexpr char kMagic[4] = {'P', 'S', 'M', 'P'};
constexpr std::uint32_t kVersion = 1;
}  // namespace

void write_sample_set(const std::filesystem::path& path, const SampleSet& ss) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw IoError("cannot write sample set " + path.string());
  out.write(kMagic, 4);
  detail::write_le<std::uint32_t>(out, kVersion);
  detail::write_le<std::uint32_t>(out, static_cast<std::uint32_t>(ss.num_samples));
  detail::write_le<std::uint32_t>(out, static_cast<std::uint32_t>(ss.rows));
  detail::write_le<std::uint32_t>(out, static_cast<std::uint32_t>(ss.cols));
  detail::write_le<std::uint32_t>(out, static_cast<std::uint32_t>(ss.num_classes));
  detail::write_le<std::uint64_t>(out, ss.seed);
  for (const LabelMap& lm : ss.labels) {
    detail::write_le_span<std::uint8_t>(out, lm.values);
  }
  detail::write_le_span<float>(out, ss.probs);
  if (!out) throw IoError("failed writing sample set " + path.string());
}

SampleSet read_sample_set(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open sample set " + path.string());
  char magic[4];
  if (!in.read(magic, 4) || std::memcmp(magic, kMagic, 4) != 0) {
    throw IoError(path.string() + " is not a sample set file");
  }
  const auto version = detail::read_le<std::uint32_t>(in, "version");
  if (version != kVersion) {
    throw IoError("unsupported sample set version " + std::to_string(version));
  }
  SampleSet ss;
  ss.num_samples = static_cast<int>(detail::read_le<std::uint32_t>(in, "N"));
  ss.rows = static_cast<int>(detail::read_le<std::uint32_t>(in, "rows"));
  ss.cols = static_cast<int>(detail::read_le<std::uint32_t>(in, "cols"));
  ss.num_classes = static_cast<int>(detail::read_le<std::uint32_t>(in, "K"));
  ss.seed = detail::read_le<std::uint64_t>(in, "seed");
  ss.labels.reserve(ss.num_samples);
  for (int n = 0; n < ss.num_samples; ++n) {
    LabelMap lm(ss.rows, ss.cols);
    detail::read_le_span<std::uint8_t>(in, lm.values, "labels");
    ss.labels.push_back(std::move(lm));
  }
  ss.probs.resize(static_cast<std::size_t>(ss.num_samples) * ss.num_classes * ss.pixels());
  detail::read_le_span<float>(in, ss.probs, "probabilities");
  return ss;
}

}  // namespace phiseg
