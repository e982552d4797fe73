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

#include "phiseg/checkpoint.hpp"

#include <cstring>
#include <fstream>
#include <map>

#include "../core/binary_io.hpp"
#include "phiseg/errors.hpp"

namespace phiseg {

namespace {

constexpr char kMagic[4] = {'P', 'H', 'S', 'G'};

enum class DType : std::uint8_t { kF32 = 0, kF64 = 1, kI64 = 2 };

DType dtype_code(const torch::Tensor& t) {
  switch (t.scalar_type()) {
    case torch::kFloat32:
      return DType::kF32;
    case torch::kFloat64:
      return DType::kF64;
    case torch::kInt64:
      return DType::kI64;
    default:
      throw IoError("checkpoint: unsupported tensor dtype");
  }
}

torch::ScalarType scalar_type(DType d) {
  switch (d) {
    case DType::kF32:
      return torch::kFloat32;
    case DType::kF64:
      return torch::kFloat64;
    case DType::kI64:
      return torch::kInt64;
  }
  throw IoError("checkpoint: bad dtype code");
}

std::map<std::string, torch::Tensor> named_state(PHiSeg& model) {
  std::map<std::string, torch::Tensor> out;
  for (const auto& p : model->named_parameters()) out.emplace(p.key(), p.value());
  for (const auto& b : model->named_buffers()) out.emplace(b.key(), b.value());
  return out;
}

nlohmann::json read_header(std::istream& in, const std::filesystem::path& path) {
  char magic[4];
  if (!in.read(magic, 4) || std::memcmp(magic, kMagic, 4) != 0) {
    throw IoError(path.string() + " is not a checkpoint file");
  }
  const auto version = detail::read_le<std::uint32_t>(in, "format version");
  if (version != kCheckpointFormatVersion) {
    throw IoError("unsupported checkpoint format version " + std::to_string(version));
  }
  const auto len = detail::read_le<std::uint64_t>(in, "metadata length");
  std::string text(len, '\0');
  if (!in.read(text.data(), static_cast<std::streamsize>(len))) {
    throw IoError("truncated checkpoint metadata in " + path.string());
  }
  try {
    return nlohmann::json::parse(text);
  } catch (const nlohmann::json::exception& e) {
    throw IoError("corrupt checkpoint metadata: " + std::string(e.what()));
  }
}

}  // namespace

void save_weights(const std::filesystem::path& path, PHiSeg& model,
                  const nlohmann::json& extra_metadata) {
  nlohmann::json meta = extra_metadata;
  meta["model"] = to_json(model->config());
  const std::string text = meta.dump();

  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw IoError("cannot write checkpoint " + path.string());
  out.write(kMagic, 4);
  detail::write_le<std::uint32_t>(out, kCheckpointFormatVersion);
  detail::write_le<std::uint64_t>(out, text.size());
  out.write(text.data(), static_cast<std::streamsize>(text.size()));

  const auto state = named_state(model);
  detail::write_le<std::uint32_t>(out, static_cast<std::uint32_t>(state.size()));
  for (const auto& [name, tensor] : state) {
    const torch::Tensor t = tensor.detach().contiguous().to(torch::kCPU);
    detail::write_le<std::uint32_t>(out, static_cast<std::uint32_t>(name.size()));
    out.write(name.data(), static_cast<std::streamsize>(name.size()));
    detail::write_le<std::uint8_t>(out, static_cast<std::uint8_t>(dtype_code(t)));
    detail::write_le<std::uint32_t>(out, static_cast<std::uint32_t>(t.dim()));
    for (int64_t d : t.sizes()) detail::write_le<std::int64_t>(out, d);
    switch (dtype_code(t)) {
      case DType::kF32:
        detail::write_le_span<float>(out, {t.data_ptr<float>(), static_cast<std::size_t>(t.numel())});
        break;
      case DType::kF64:
        detail::write_le_span<double>(out, {t.data_ptr<double>(), static_cast<std::size_t>(t.numel())});
        break;
      case DType::kI64:
        detail::write_le_span<std::int64_t>(
            out, {t.data_ptr<std::int64_t>(), static_cast<std::size_t>(t.numel())});
        break;
    }
  }
  if (!out) throw IoError("failed writing checkpoint " + path.string());
}

nlohmann::json read_checkpoint_metadata(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open checkpoint " + path.string());
  return read_header(in, path);
}

LoadedWeights load_weights(const std::filesystem::path& path,
                           const std::optional<ModelConfig>& expected) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open checkpoint " + path.string());
  LoadedWeights out;
  out.metadata = read_header(in, path);
  if (!out.metadata.contains("model")) throw IoError("checkpoint lacks a model config record");
  ModelConfig config;
  try {
    config = model_config_from_json(out.metadata["model"]);
  } catch (const ConfigError& e) {
    throw IoError(std::string("checkpoint config record invalid: ") + e.what());
  }
  if (expected && !(*expected == config)) {
    throw DimensionMismatch("checkpoint " + path.string() +
                            " was saved with a different model config: " +
                            to_json(config).dump() + " vs expected " + to_json(*expected).dump());
  }

  out.model = build_model(config, 0);
  auto state = named_state(out.model);
  const auto count = detail::read_le<std::uint32_t>(in, "tensor count");
  if (count != state.size()) {
    throw DimensionMismatch("checkpoint holds " + std::to_string(count) + " tensors, model has " +
                            std::to_string(state.size()));
  }
  torch::NoGradGuard no_grad;
  for (std::uint32_t i = 0; i < count; ++i) {
    const auto name_len = detail::read_le<std::uint32_t>(in, "tensor name length");
    std::string name(name_len, '\0');
    if (!in.read(name.data(), name_len)) throw IoError("truncated tensor name");
    const auto dtype = static_cast<DType>(detail::read_le<std::uint8_t>(in, "dtype"));
    const auto rank = detail::read_le<std::uint32_t>(in, "rank");
    std::vector<int64_t> dims(rank);
    for (auto& d : dims) d = detail::read_le<std::int64_t>(in, "dims");

    auto it = state.find(name);
    if (it == state.end()) throw DimensionMismatch("checkpoint tensor '" + name + "' not in model");
    torch::Tensor target = it->second;
    if (target.sizes() != c10::IntArrayRef(dims)) {
      throw DimensionMismatch("checkpoint tensor '" + name + "' has the wrong shape");
    }
    torch::Tensor buf = torch::empty(dims, torch::TensorOptions().dtype(scalar_type(dtype)));
    const auto n = static_cast<std::size_t>(buf.numel());
    switch (dtype) {
      case DType::kF32:
        detail::read_le_span<float>(in, {buf.data_ptr<float>(), n}, name);
        break;
      case DType::kF64:
        detail::read_le_span<double>(in, {buf.data_ptr<double>(), n}, name);
        break;
      case DType::kI64:
        detail::read_le_span<std::int64_t>(in, {buf.data_ptr<std::int64_t>(), n}, name);
        break;
    }
    target.copy_(buf.to(target.scalar_type()));
  }
  return out;
}

}  // namespace phiseg
