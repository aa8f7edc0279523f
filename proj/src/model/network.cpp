// Copyright 2026 The stbert Authors
// SPDX-License-Identifier: Apache-2.0

#include "stbert/model/network.hpp"

#include <cmath>
#include <string>

#include "stbert/common/error.hpp"

namespace stbert::model {

using num::Graph;
using num::Shape;
using num::Tensor;
using num::Var;

std::vector<int> EncodedBatch::cls_rows() const {
  std::vector<int> rows;
  for (std::size_t i = 0; i + 1 < offsets.size(); ++i) rows.push_back(static_cast<int>(offsets[i]));
  return rows;
}

template <typename T>
Var embed(Graph<T>& g, const ParamVars& p, const PackedInput& in) {
  const std::size_t n = in.size();
  if (n == 0) throw DataError("embed: empty packed input");
  if (n > g.value(p.position_embedding).rows()) {
    throw DataError("sequence too long: " + std::to_string(n) + " slots exceed the position table");
  }

  bool needs_speech = false;
  std::vector<int> text_ids;
  for (const auto& s : in.slots) {
    if (s.kind == SlotKind::kSpeech) needs_speech = true;
    if (s.kind == SlotKind::kText) text_ids.push_back(s.source);
  }

  // Content table rows: [speech frames | visible text tokens | special tokens].
  std::vector<Var> parts;
  std::size_t text_offset = 0;
  if (needs_speech) {
    const auto& gram = *in.posteriors;
    Tensor<T> post(Shape{gram.frames(), gram.phonemes()});
    for (std::size_t i = 0; i < post.numel(); ++i) post[i] = static_cast<T>(gram.values()[i]);
    parts.push_back(g.matmul(g.constant(std::move(post)), p.phoneme_embedding));
    text_offset = gram.frames();
  }
  std::size_t special_offset = text_offset;
  if (!text_ids.empty()) {
    parts.push_back(g.gather_rows(p.subword_embedding, text_ids));
    special_offset += text_ids.size();
  }
  parts.push_back(p.special_embedding);
  const Var table = parts.size() == 1 ? parts[0] : g.concat(parts, 0);

  std::vector<int> rows(n);
  std::size_t next_text = 0;
  for (std::size_t i = 0; i < n; ++i) {
    const auto& s = in.slots[i];
    switch (s.kind) {
      case SlotKind::kCls:
        rows[i] = static_cast<int>(special_offset + kSpecialCls);
        break;
      case SlotKind::kSep:
        rows[i] = static_cast<int>(special_offset + kSpecialSep);
        break;
      case SlotKind::kMask:
        rows[i] = static_cast<int>(special_offset + kSpecialMask);
        break;
      case SlotKind::kSpeech:
        rows[i] = s.source;
        break;
      case SlotKind::kText:
        rows[i] = static_cast<int>(text_offset + next_text++);
        break;
    }
  }
  Var x = g.gather_rows(table, std::move(rows));
  x = g.add(x, g.gather_rows(p.modality_embedding, in.modality_ids()));
  x = g.add(x, g.slice(p.position_embedding, 0, 0, n));
  return x;
}

template <typename T>
Var encode(Graph<T>& g, const ParamVars& p, const ModelConfig& c, Var x, std::span<const std::size_t> lengths,
           Rng* dropout_rng) {
  const std::size_t d = c.hidden;
  const std::size_t heads = c.heads;
  const std::size_t dh = d / heads;
  const T scale = static_cast<T>(1.0 / std::sqrt(static_cast<double>(dh)));
  const T eps = static_cast<T>(c.layer_norm_eps);
  const bool use_dropout = dropout_rng && c.dropout > 0.0;
  const auto drop = [&](Var v) { return use_dropout ? g.dropout(v, static_cast<T>(c.dropout), *dropout_rng) : v; };

  for (const auto& layer : p.layers) {
    const Var q = g.add_bias(g.matmul(x, layer.query_w), layer.query_b);
    const Var k = g.add_bias(g.matmul(x, layer.key_w), layer.key_b);
    const Var v = g.add_bias(g.matmul(x, layer.value_w), layer.value_b);

    std::vector<Var> contexts;
    std::size_t offset = 0;
    for (std::size_t len : lengths) {
      const bool whole = lengths.size() == 1;
      const Var qs = whole ? q : g.slice(q, 0, offset, offset + len);
      const Var ks = whole ? k : g.slice(k, 0, offset, offset + len);
      const Var vs = whole ? v : g.slice(v, 0, offset, offset + len);
      std::vector<Var> head_out;
      for (std::size_t h = 0; h < heads; ++h) {
        const Var qh = heads == 1 ? qs : g.slice(qs, 1, h * dh, (h + 1) * dh);
        const Var kh = heads == 1 ? ks : g.slice(ks, 1, h * dh, (h + 1) * dh);
        const Var vh = heads == 1 ? vs : g.slice(vs, 1, h * dh, (h + 1) * dh);
        const Var scores = g.scale(g.matmul(qh, kh, /*transpose_b=*/true), scale);
        head_out.push_back(g.matmul(g.softmax(scores, 1), vh));
      }
      contexts.push_back(heads == 1 ? head_out[0] : g.concat(head_out, 1));
      offset += len;
    }
    const Var context = contexts.size() == 1 ? contexts[0] : g.concat(contexts, 0);
    const Var attn = g.add_bias(g.matmul(context, layer.out_w), layer.out_b);
    x = g.layer_norm(g.add(x, drop(attn)), layer.attn_norm_g, layer.attn_norm_b, eps);

    const Var inner = g.gelu(g.add_bias(g.matmul(x, layer.ff_in_w), layer.ff_in_b));
    const Var ff = g.add_bias(g.matmul(inner, layer.ff_out_w), layer.ff_out_b);
    x = g.layer_norm(g.add(x, drop(ff)), layer.ff_norm_g, layer.ff_norm_b, eps);
  }
  return x;
}

template <typename T>
EncodedBatch forward(Graph<T>& g, const ParamVars& p, const ModelConfig& c, std::span<const PackedInput> batch,
                     Rng* dropout_rng) {
  if (batch.empty()) throw DataError("forward: empty batch");
  EncodedBatch out;
  out.offsets.push_back(0);
  std::vector<Var> embedded;
  std::vector<std::size_t> lengths;
  for (const auto& in : batch) {
    Var e = embed(g, p, in);
    if (dropout_rng && c.dropout > 0.0) e = g.dropout(e, static_cast<T>(c.dropout), *dropout_rng);
    embedded.push_back(e);
    lengths.push_back(in.size());
    out.offsets.push_back(out.offsets.back() + in.size());
  }
  const Var x = embedded.size() == 1 ? embedded[0] : g.concat(embedded, 0);
  out.hidden = encode(g, p, c, x, lengths, dropout_rng);
  return out;
}

template <typename T>
Var lm_logits(Graph<T>& g, const ParamVars& p, const EncodedBatch& encoded, std::span<const PackedInput> batch,
              std::span<const Position> positions, Modality modality) {
  if (positions.empty()) throw DataError("lm_logits: no positions");
  std::vector<int> rows;
  rows.reserve(positions.size());
  for (const auto& pos : positions) {
    if (pos.sequence >= batch.size() || pos.slot >= batch[pos.sequence].size()) {
      throw DataError("lm_logits: position out of range");
    }
    if (!batch[pos.sequence].slots[pos.slot].carries(modality)) {
      throw DataError("lm_logits: slot " + std::to_string(pos.slot) + " of sequence " + std::to_string(pos.sequence) +
                      " does not belong to the requested modality");
    }
    rows.push_back(static_cast<int>(encoded.row(pos)));
  }
  const Var h = g.gather_rows(encoded.hidden, std::move(rows));
  if (modality == Modality::kSpeech) return g.add_bias(g.matmul(h, p.phoneme_head_w), p.phoneme_head_b);
  return g.add_bias(g.matmul(h, p.subword_embedding, /*transpose_b=*/true), p.subword_head_b);
}

template <typename T>
Var intent_logits(Graph<T>& g, const ParamVars& p, const EncodedBatch& encoded) {
  const Var cls = g.gather_rows(encoded.hidden, encoded.cls_rows());
  return g.add_bias(g.matmul(cls, p.intent_head_w), p.intent_head_b);
}

#define STBERT_INSTANTIATE(T)                                                                                   \
  template Var embed(Graph<T>&, const ParamVars&, const PackedInput&);                                          \
  template Var encode(Graph<T>&, const ParamVars&, const ModelConfig&, Var, std::span<const std::size_t>, Rng*); \
  template EncodedBatch forward(Graph<T>&, const ParamVars&, const ModelConfig&, std::span<const PackedInput>,  \
                                Rng*);                                                                          \
  template Var lm_logits(Graph<T>&, const ParamVars&, const EncodedBatch&, std::span<const PackedInput>,        \
                         std::span<const Position>, Modality);                                                  \
  template Var intent_logits(Graph<T>&, const ParamVars&, const EncodedBatch&);

STBERT_INSTANTIATE(float)
STBERT_INSTANTIATE(double)

#undef STBERT_INSTANTIATE

}  // namespace stbert::model
