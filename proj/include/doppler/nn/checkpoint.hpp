#pragma once

#include <cstring>
#include <filesystem>
#include <vector>

#include "doppler/core/file_io.hpp"
#include "doppler/core/json_io.hpp"
#include "doppler/nn/models.hpp"

namespace doppler::nn {

// Checkpoint directory: meta.json describing the architecture and tensor
// layout, params.bin holding every parameter then every buffer as float32
// little-endian in registration order.
template <typename T>
void save_model(Model<T>& model, const std::filesystem::path& dir) {
  namespace fs = std::filesystem;
  fs::create_directories(dir);

  ParamCollector<T> pc;
  model.collect(pc);

  ordered_json meta;
  meta["format_version"] = 1;
  meta["kind"] = "model-checkpoint";
  meta["arch"] = model.arch();
  meta["packet"] = model.packet;
  meta["dtype"] = "float32";
  ordered_json tensors = ordered_json::array();
  std::vector<float> blob;
  const auto append = [&](const std::string& name, const char* role, const Tensor<T>& t) {
    ordered_json e;
    e["name"] = name;
    e["role"] = role;
    e["shape"] = {t.n(), t.c(), t.h(), t.w()};
    tensors.push_back(e);
    for (Eigen::Index i = 0; i < t.size(); ++i) blob.push_back(static_cast<float>(t.data[i]));
  };
  for (const auto& [name, v] : pc.params) append(name, "param", v->value());
  for (const auto& [name, b] : pc.buffers) append(name, "buffer", *b);
  meta["tensors"] = tensors;

  const std::string text = meta.dump(2) + "\n";
  write_file_atomic(dir / "meta.json", text.data(), text.size());
  write_file_atomic(dir / "params.bin", blob.data(), blob.size() * sizeof(float));
}

template <typename T>
std::unique_ptr<Model<T>> load_model(const std::filesystem::path& dir) {
  const auto meta_text = read_whole_file(dir / "meta.json");
  ordered_json meta;
  try {
    meta = ordered_json::parse(meta_text.begin(), meta_text.end());
  } catch (const nlohmann::json::exception& e) {
    throw DataError("checkpoint meta.json: " + std::string(e.what()));
  }
  if (meta.value("kind", "") != "model-checkpoint")
    throw DataError("checkpoint: not a model checkpoint: " + dir.string());
  if (meta.value("format_version", 0) != 1)
    throw DataError("checkpoint: unsupported format_version");

  auto model = make_model<T>(meta.at("arch").get<std::string>(), meta.at("packet").get<int>(), 0);
  ParamCollector<T> pc;
  model->collect(pc);

  const auto& tensors = meta.at("tensors");
  if (tensors.size() != pc.params.size() + pc.buffers.size())
    throw DataError("checkpoint: tensor count mismatch");

  const auto blob = read_whole_file(dir / "params.bin");
  std::size_t offset = 0;
  std::size_t idx = 0;
  const auto restore = [&](const std::string& name, const char* role, Tensor<T>& t) {
    const auto& e = tensors.at(idx++);
    if (e.at("name").get<std::string>() != name || e.at("role").get<std::string>() != role)
      throw DataError("checkpoint: tensor order mismatch at '" + name + "'");
    const auto shape = e.at("shape").get<std::vector<Eigen::Index>>();
    if (shape.size() != 4 || shape[0] != t.n() || shape[1] != t.c() || shape[2] != t.h() ||
        shape[3] != t.w())
      throw DataError("checkpoint: shape mismatch at '" + name + "'");
    const std::size_t bytes = static_cast<std::size_t>(t.size()) * sizeof(float);
    if (offset + bytes > blob.size()) throw DataError("checkpoint: params.bin too short");
    for (Eigen::Index i = 0; i < t.size(); ++i) {
      float f;
      std::memcpy(&f, blob.data() + offset + static_cast<std::size_t>(i) * sizeof(float),
                  sizeof(float));
      t.data[i] = static_cast<T>(f);
    }
    offset += bytes;
  };
  for (auto& [name, v] : pc.params) restore(name, "param", v->value());
  for (auto& [name, b] : pc.buffers) restore(name, "buffer", *b);
  if (offset != blob.size()) throw DataError("checkpoint: params.bin has trailing bytes");
  return model;
}

}  // namespace doppler::nn
