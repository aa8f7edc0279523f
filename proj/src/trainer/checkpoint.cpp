// Copyright 2026 The stbert Authors
// SPDX-License-Identifier: Apache-2.0

#include "stbert/trainer/checkpoint.hpp"

#include <bit>
#include <fstream>
#include <iterator>
#include <map>
#include <sstream>

#include "json.hpp"
#include "stbert/common/error.hpp"

namespace stbert::trainer {

namespace {

using json = nlohmann::json;
using num::Tensor;

constexpr std::string_view kMagic = "STBT1\n";

json model_to_json(const model::ModelConfig& c) {
  return {{"hidden", c.hidden},   {"layers", c.layers},
          {"heads", c.heads},     {"ff_dim", c.ff_dim},
          {"phonemes", c.phonemes}, {"vocab", c.vocab},
          {"max_positions", c.max_positions}, {"intents", c.intents},
          {"init_std", c.init_std}, {"dropout", c.dropout},
          {"layer_norm_eps", c.layer_norm_eps}};
}

model::ModelConfig model_from_json(const json& j) {
  model::ModelConfig c;
  c.hidden = j.at("hidden");
  c.layers = j.at("layers");
  c.heads = j.at("heads");
  c.ff_dim = j.at("ff_dim");
  c.phonemes = j.at("phonemes");
  c.vocab = j.at("vocab");
  c.max_positions = j.at("max_positions");
  c.intents = j.at("intents");
  c.init_std = j.at("init_std");
  c.dropout = j.at("dropout");
  c.layer_norm_eps = j.at("layer_norm_eps");
  return c;
}

json train_to_json(const TrainConfig& c) {
  return {{"total_steps", c.total_steps},
          {"batch_size", c.batch_size},
          {"peak_lr", c.peak_lr},
          {"warmup_fraction", c.warmup_fraction},
          {"curriculum_fraction", c.curriculum_fraction},
          {"mask_rate", c.mask_rate},
          {"tasks", tasks_to_string(c.tasks)},
          {"seed", c.seed},
          {"eval_every", c.eval_every},
          {"beta1", c.beta1},
          {"beta2", c.beta2},
          {"adam_eps", c.adam_eps},
          {"max_grad_norm", c.max_grad_norm}};
}

TrainConfig train_from_json(const json& j) {
  TrainConfig c;
  c.total_steps = j.at("total_steps");
  c.batch_size = j.at("batch_size");
  c.peak_lr = j.at("peak_lr");
  c.warmup_fraction = j.at("warmup_fraction");
  c.curriculum_fraction = j.at("curriculum_fraction");
  c.mask_rate = j.at("mask_rate");
  c.tasks = tasks_from_string(j.at("tasks").get<std::string>());
  c.seed = j.at("seed");
  c.eval_every = j.at("eval_every");
  c.beta1 = j.at("beta1");
  c.beta2 = j.at("beta2");
  c.adam_eps = j.at("adam_eps");
  c.max_grad_norm = j.at("max_grad_norm");
  return c;
}

void put_u64(std::string& out, std::uint64_t v) {
  for (int i = 0; i < 8; ++i) out.push_back(static_cast<char>((v >> (8 * i)) & 0xFF));
}

std::uint64_t get_u64(std::string_view b) {
  std::uint64_t v = 0;
  for (int i = 0; i < 8; ++i) v |= static_cast<std::uint64_t>(static_cast<unsigned char>(b[i])) << (8 * i);
  return v;
}

void put_f32(std::string& out, float f) {
  const auto v = std::bit_cast<std::uint32_t>(f);
  for (int i = 0; i < 4; ++i) out.push_back(static_cast<char>((v >> (8 * i)) & 0xFF));
}

std::uint64_t read_le(const char* p, int bytes) {
  std::uint64_t v = 0;
  for (int i = 0; i < bytes; ++i) v |= static_cast<std::uint64_t>(static_cast<unsigned char>(p[i])) << (8 * i);
  return v;
}

std::size_t dtype_size(const std::string& dtype) {
  if (dtype == "f32") return 4;
  if (dtype == "f64") return 8;
  throw DataError("checkpoint: unknown dtype '" + dtype + "'");
}

/// Every tensor of the checkpoint under its directory name.
template <typename F>
void visit_tensors(Checkpoint& c, F&& f) {
  c.params.visit([&](const std::string& name, Tensor<float>& t) { f("param/" + name, t); });
  if (c.state.adam) {
    c.state.adam->m.visit([&](const std::string& name, Tensor<float>& t) { f("adam.m/" + name, t); });
    c.state.adam->v.visit([&](const std::string& name, Tensor<float>& t) { f("adam.v/" + name, t); });
  }
}

}  // namespace

const std::string& Checkpoint::stage() const {
  static const std::string kNone = "init";
  return lineage.empty() ? kNone : lineage.back();
}

std::string serialize_checkpoint(const Checkpoint& ckpt) {
  auto& c = const_cast<Checkpoint&>(ckpt);  // visit_tensors only reads here
  json dir = json::array();
  std::string payload;
  visit_tensors(c, [&](const std::string& name, Tensor<float>& t) {
    dir.push_back({{"name", name}, {"dtype", "f32"}, {"shape", t.shape()}, {"offset", payload.size()}});
    for (float v : t.values()) put_f32(payload, v);
  });
  json header = {{"format", "stbert-checkpoint"},
                 {"lineage", c.lineage},
                 {"model", model_to_json(c.model)},
                 {"train", train_to_json(c.train)},
                 {"state",
                  {{"step", c.state.step},
                   {"adam_step", c.state.adam ? json(c.state.adam->step) : json(nullptr)},
                   {"rng", c.state.rng_state}}},
                 {"tensors", dir}};
  const std::string text = header.dump();
  std::string out(kMagic);
  put_u64(out, text.size());
  out += text;
  out += payload;
  return out;
}

Checkpoint parse_checkpoint(std::string_view bytes) {
  if (bytes.size() < kMagic.size() || bytes.substr(0, kMagic.size()) != kMagic) {
    throw DataError("checkpoint: bad magic");
  }
  bytes.remove_prefix(kMagic.size());
  if (bytes.size() < 8) throw DataError("checkpoint: truncated header");
  const auto header_len = get_u64(bytes);
  bytes.remove_prefix(8);
  if (header_len > bytes.size()) throw DataError("checkpoint: truncated header");
  json header;
  try {
    header = json::parse(bytes.substr(0, header_len));
  } catch (const json::exception& e) {
    throw DataError(std::string("checkpoint: malformed header: ") + e.what());
  }
  const std::string_view payload = bytes.substr(header_len);

  Checkpoint c;
  std::map<std::string, Tensor<float>> tensors;
  try {
    c.model = model_from_json(header.at("model"));
    c.model.validate();
    c.train = train_from_json(header.at("train"));
    c.lineage = header.at("lineage").get<std::vector<std::string>>();
    const auto& st = header.at("state");
    c.state.step = st.at("step");
    c.state.rng_state = st.at("rng");
    std::size_t expected_offset = 0;
    for (const auto& entry : header.at("tensors")) {
      const std::string name = entry.at("name");
      const std::string dtype = entry.at("dtype");
      const auto shape = entry.at("shape").get<num::Shape>();
      const std::size_t offset = entry.at("offset");
      const std::size_t width = dtype_size(dtype);
      if (offset != expected_offset) throw DataError("checkpoint: tensor " + name + " has a non-sequential offset");
      const std::size_t numel = num::shape_numel(shape);
      if (offset + numel * width > payload.size()) throw DataError("checkpoint: truncated payload at tensor " + name);
      Tensor<float> t(shape);
      const char* p = payload.data() + offset;
      for (std::size_t i = 0; i < numel; ++i) {
        if (width == 4) {
          t[i] = std::bit_cast<float>(static_cast<std::uint32_t>(read_le(p + 4 * i, 4)));
        } else {
          t[i] = static_cast<float>(std::bit_cast<double>(read_le(p + 8 * i, 8)));
        }
      }
      expected_offset = offset + numel * width;
      tensors.emplace(name, std::move(t));
    }
    if (expected_offset != payload.size()) {
      throw DataError("checkpoint: payload size " + std::to_string(payload.size()) +
                      " disagrees with tensor directory (" + std::to_string(expected_offset) + " bytes)");
    }
    if (!st.at("adam_step").is_null()) {
      c.state.adam.emplace();
      c.state.adam->step = st.at("adam_step");
    }
  } catch (const json::exception& e) {
    throw DataError(std::string("checkpoint: malformed header: ") + e.what());
  }

  c.params = model::init_params<float>(c.model, 0);
  if (c.state.adam) {
    c.state.adam->m = model::zeros_like(c.params);
    c.state.adam->v = model::zeros_like(c.params);
  }
  std::size_t used = 0;
  visit_tensors(c, [&](const std::string& name, Tensor<float>& t) {
    auto it = tensors.find(name);
    if (it == tensors.end()) throw DataError("checkpoint: missing tensor " + name);
    if (it->second.shape() != t.shape()) {
      throw DataError("checkpoint: tensor " + name + " has shape " + num::shape_str(it->second.shape()) +
                      ", model config expects " + num::shape_str(t.shape()));
    }
    t = std::move(it->second);
    ++used;
  });
  if (used != tensors.size()) throw DataError("checkpoint: unexpected extra tensors");
  return c;
}

void save_checkpoint(const Checkpoint& ckpt, const std::filesystem::path& path) {
  const auto bytes = serialize_checkpoint(ckpt);
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw DataError("cannot write checkpoint " + path.string());
  out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
  if (!out) throw DataError("failed writing checkpoint " + path.string());
}

Checkpoint load_checkpoint(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataError("cannot open checkpoint " + path.string());
  const std::string bytes((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
  return parse_checkpoint(bytes);
}

}  // namespace stbert::trainer
