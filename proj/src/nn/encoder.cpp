#include "mog/nn/encoder.hpp"

#include <cmath>
#include <stdexcept>

namespace mog::nn {

std::string to_string(Fusion fusion) {
  switch (fusion) {
    case Fusion::sum: return "sum";
    case Fusion::weight_gate: return "weight-gate";
    case Fusion::self_gate: return "self-gate";
  }
  return "?";
}

Fusion parse_fusion(const std::string& text) {
  if (text == "sum") return Fusion::sum;
  if (text == "weight-gate" || text == "weight_gate" || text == "gate") return Fusion::weight_gate;
  if (text == "self-gate" || text == "self_gate") return Fusion::self_gate;
  throw std::invalid_argument("unknown fusion '" + text + "' (expected sum, weight-gate or self-gate)");
}

std::string to_string(Architecture arch) { return arch == Architecture::graph ? "graph" : "transformer"; }

Architecture parse_architecture(const std::string& text) {
  if (text == "graph") return Architecture::graph;
  if (text == "transformer" || text == "baseline") return Architecture::transformer;
  throw std::invalid_argument("unknown architecture '" + text + "' (expected transformer or graph)");
}

void EncoderConfig::validate() const {
  if (model_dim == 0 || heads == 0 || ffn_dim == 0) throw std::invalid_argument("model_dim, heads and ffn_dim must be positive");
  if (model_dim % heads != 0) throw std::invalid_argument("model_dim must be divisible by heads");
  if (half_dim && model_dim % (2 * heads) != 0)
    throw std::invalid_argument("half_dim needs model_dim divisible by 2*heads");
  if (dropout < 0.0 || dropout >= 1.0) throw std::invalid_argument("dropout must be in [0,1)");
}

namespace {

std::string layer_prefix(const std::string& prefix, std::size_t i) { return prefix + ".l" + std::to_string(i); }

std::string qkv_name(const std::string& lp, const EncoderConfig& cfg, const char* part) {
  return cfg.shared_qkv ? lp + ".qkv" : lp + "." + part + ".qkv";
}

Var attention_part(Binder& p, const std::string& lp, const EncoderConfig& cfg, const char* part, Var query, Var source,
                   const SeqLayout& layout, const RunMode& mode) {
  const std::string base = lp + "." + part;
  Var a = multi_head(p, qkv_name(lp, cfg, part), base + ".out", query, source, layout, layout, cfg.heads);
  return layer_norm(p, base + ".ln", num::add(query, drop(a, mode)));
}

void add_attention_part(ParamStore& store, const std::string& lp, const EncoderConfig& cfg, const char* part,
                        std::mt19937_64& rng) {
  const std::size_t d = cfg.model_dim, inner = cfg.attention_dim();
  const std::string proj = qkv_name(lp, cfg, part);
  if (!store.contains(proj + ".wq")) add_projections(store, proj, d, inner, rng);
  add_output(store, lp + "." + part + ".out", inner, d, rng);
  add_layer_norm(store, lp + "." + part + ".ln", d);
}

Var zeros_like(Var v) { return v.tape().constant(Tensor(v.shape())); }

}  // namespace

SplitParts split_attention_layer(Binder& p, const std::string& prefix, const EncoderConfig& cfg, Var prev, Var incr,
                                 const SeqLayout& layout, const RunMode& mode) {
  num::require_same_shape(prev.value(), incr.value(), "split_attention_layer");
  SplitParts parts;
  parts.high = attention_part(p, prefix, cfg, "high", incr, incr, layout, mode);
  parts.middle_a = attention_part(p, prefix, cfg, "mid_a", incr, prev, layout, mode);
  parts.middle_b = attention_part(p, prefix, cfg, "mid_b", prev, incr, layout, mode);
  parts.low = linear(p, prefix + ".low", prev);
  return parts;
}

Fused fuse_sum(Var high, Var middle, Var low, Var prev) {
  Fused f;
  f.incremental = num::add(num::add(high, middle), low);
  f.full = num::add(prev, f.incremental);
  return f;
}

Fused fuse_weight_gate(Var high, Var middle, Var low, Var prev) {
  Fused f;
  Var hm = num::add(high, middle);
  f.w = num::sigmoid(num::add(hm, low));
  f.incremental = num::add(num::mul(hm, f.w), num::mul(low, num::affine(f.w, -1.0, 1.0)));
  f.full = num::add(prev, f.incremental);
  return f;
}

Fused fuse_self_gate(Binder& p, const std::string& prefix, const std::array<Var, 4>& parts, Var prev) {
  for (const Var& v : parts) num::require_same_shape(v.value(), prev.value(), "fuse_self_gate");
  const std::size_t n = prev.rows();
  Var stacked = num::interleave_rows(parts);
  Var q = num::linear(stacked, p(prefix + ".wq"), p(prefix + ".bq"));
  Var k = num::matmul(stacked, p(prefix + ".wk"));
  Var v = num::linear(stacked, p(prefix + ".wv"), p(prefix + ".bv"));
  num::AttentionLayout layout;
  layout.batch = n;
  layout.query_len = 4;
  layout.key_len = 4;
  layout.heads = 1;
  layout.scale = 1.0 / double(q.cols());
  Var r = num::scale(num::attention_core(q, k, v, layout), 0.25);
  Fused f;
  f.incremental = num::group_sum_rows(r, 4);
  f.full = num::add(prev, f.incremental);
  return f;
}

GateRecord summarize_gate(const Tensor& w, const SeqLayout& layout, std::size_t layer) {
  GateRecord rec;
  rec.layer = layer;
  double total = 0.0;
  std::size_t count = 0;
  const std::size_t d = w.cols();
  for (std::size_t b = 0; b < layout.batch; ++b) {
    const std::size_t valid = layout.lengths.empty() ? layout.len : layout.lengths[b];
    double s = 0.0;
    for (std::size_t t = 0; t < valid; ++t)
      for (double x : w.row(b * layout.len + t)) s += x;
    rec.per_sentence.push_back(s / double(valid * d));
    total += s;
    count += valid * d;
  }
  rec.mean_w = total / double(count);
  return rec;
}

void add_encoder(ParamStore& store, const EncoderConfig& cfg, std::mt19937_64& rng, const std::string& prefix) {
  cfg.validate();
  const std::size_t d = cfg.model_dim;
  for (std::size_t i = 0; i < cfg.layers; ++i) {
    const std::string lp = layer_prefix(prefix, i);
    if (cfg.architecture == Architecture::transformer) {
      add_projections(store, lp + ".attn.qkv", d, d, rng);
      add_output(store, lp + ".attn.out", d, d, rng);
      add_layer_norm(store, lp + ".attn.ln", d);
    } else {
      add_attention_part(store, lp, cfg, "high", rng);
      if (i > 0) {
        add_attention_part(store, lp, cfg, "mid_a", rng);
        add_attention_part(store, lp, cfg, "mid_b", rng);
        add_linear(store, lp + ".low", d, d, rng);
      }
      if (cfg.fusion == Fusion::self_gate) add_projections(store, lp + ".gate", d, d, rng);
    }
    add_ffn(store, lp + ".ffn", d, cfg.ffn_dim, rng);
    add_layer_norm(store, lp + ".ffn.ln", d);
  }
}

EncoderOutput encode(Binder& p, const EncoderConfig& cfg, Var input, const SeqLayout& layout, const RunMode& mode,
                     const std::string& prefix) {
  if (input.cols() != cfg.model_dim || input.rows() != layout.batch * layout.len)
    throw num::DimensionError("encode: input shape " + num::to_string(input.shape()) + " does not match the layout");
  EncoderOutput out;
  out.layout = layout;
  if (cfg.architecture == Architecture::transformer) {
    Var x = input;
    for (std::size_t i = 0; i < cfg.layers; ++i) {
      const std::string lp = layer_prefix(prefix, i);
      Var a = multi_head(p, lp + ".attn.qkv", lp + ".attn.out", x, x, layout, layout, cfg.heads);
      x = layer_norm(p, lp + ".attn.ln", num::add(x, drop(a, mode)));
      x = layer_norm(p, lp + ".ffn.ln", num::add(x, drop(feed_forward(p, lp + ".ffn", x, mode), mode)));
    }
    out.out = x;
    return out;
  }

  Var prev = zeros_like(input), incr = input;
  for (std::size_t i = 0; i < cfg.layers; ++i) {
    const std::string lp = layer_prefix(prefix, i);
    SplitParts parts;
    if (i == 0) {
      parts.high = attention_part(p, lp, cfg, "high", incr, incr, layout, mode);
      parts.middle_a = parts.middle_b = parts.low = zeros_like(input);
    } else {
      parts = split_attention_layer(p, lp, cfg, prev, incr, layout, mode);
    }
    Fused f;
    switch (cfg.fusion) {
      case Fusion::sum: f = fuse_sum(parts.high, parts.middle(), parts.low, prev); break;
      case Fusion::weight_gate:
        f = fuse_weight_gate(parts.high, parts.middle(), parts.low, prev);
        out.gates.push_back(summarize_gate(f.w.value(), layout, i + 1));
        break;
      case Fusion::self_gate:
        f = fuse_self_gate(p, lp + ".gate", {parts.low, parts.middle_a, parts.middle_b, parts.high}, prev);
        break;
    }
    Var fused = f.incremental;
    Var next_incr =
        layer_norm(p, lp + ".ffn.ln", num::add(fused, drop(feed_forward(p, lp + ".ffn", fused, mode), mode)));
    Var full = num::add(prev, next_incr);
    out.layers.push_back({prev, next_incr, full});
    prev = full;
    incr = next_incr;
  }
  out.out = prev;
  return out;
}

Batch Batch::pack(const std::vector<std::vector<int>>& seqs, int pad_id) {
  if (seqs.empty()) throw std::invalid_argument("cannot pack an empty batch");
  Batch b;
  b.layout.batch = seqs.size();
  b.layout.len = 0;
  for (const auto& s : seqs) {
    if (s.empty()) throw std::invalid_argument("cannot pack an empty sequence");
    b.layout.len = std::max(b.layout.len, s.size());
    b.layout.lengths.push_back(s.size());
  }
  b.ids.assign(b.layout.batch * b.layout.len, pad_id);
  for (std::size_t i = 0; i < seqs.size(); ++i) std::copy(seqs[i].begin(), seqs[i].end(), b.ids.begin() + i * b.layout.len);
  return b;
}

namespace {

void add_decoder(ParamStore& store, const EncoderConfig& cfg, std::mt19937_64& rng) {
  const std::size_t d = cfg.model_dim;
  for (std::size_t i = 0; i < cfg.layers; ++i) {
    const std::string lp = layer_prefix("dec", i);
    for (const char* part : {"self", "cross"}) {
      add_projections(store, lp + "." + part + ".qkv", d, d, rng);
      add_output(store, lp + "." + part + ".out", d, d, rng);
      add_layer_norm(store, lp + "." + part + ".ln", d);
    }
    add_ffn(store, lp + ".ffn", d, cfg.ffn_dim, rng);
    add_layer_norm(store, lp + ".ffn.ln", d);
  }
}

}  // namespace

Seq2Seq::Seq2Seq(ModelConfig cfg) : cfg_(std::move(cfg)) {
  cfg_.encoder.validate();
  if (cfg_.vocab_size == 0) throw std::invalid_argument("vocab_size must be positive");
  const std::size_t d = cfg_.encoder.model_dim;
  std::mt19937_64 rng(cfg_.encoder.seed);
  params_.add("src_emb", normal(cfg_.vocab_size, d, 1.0 / std::sqrt(double(d)), rng));
  params_.add("tgt_emb", normal(cfg_.vocab_size, d, 1.0 / std::sqrt(double(d)), rng));
  add_encoder(params_, cfg_.encoder, rng);
  add_decoder(params_, cfg_.encoder, rng);
  add_linear(params_, "proj", d, cfg_.vocab_size, rng);
  pe_ = positional_encoding(cfg_.encoder.position_encoding, cfg_.max_len, d, cfg_.encoder.seed + 7919);
}

Var Seq2Seq::embed(Binder& p, const std::string& table, const Batch& batch) const {
  for (int id : batch.ids)
    if (id < 0 || std::size_t(id) >= cfg_.vocab_size)
      throw std::out_of_range("token id " + std::to_string(id) + " outside the vocabulary");
  Var e = num::scale(num::embedding(p(table), batch.ids), std::sqrt(double(cfg_.encoder.model_dim)));
  return num::add(e, p.tape().constant(tile_positions(pe_, batch.layout)));
}

EncoderOutput Seq2Seq::encode(Binder& p, const Batch& src, const RunMode& mode) const {
  Var x = drop(embed(p, "src_emb", src), mode);
  return nn::encode(p, cfg_.encoder, x, src.layout, mode);
}

Var Seq2Seq::decode(Binder& p, const EncoderOutput& memory, const Batch& tgt_in, const RunMode& mode) const {
  const EncoderConfig& cfg = cfg_.encoder;
  Var x = drop(embed(p, "tgt_emb", tgt_in), mode);
  for (std::size_t i = 0; i < cfg.layers; ++i) {
    const std::string lp = layer_prefix("dec", i);
    Var a = multi_head(p, lp + ".self.qkv", lp + ".self.out", x, x, tgt_in.layout, tgt_in.layout, cfg.heads, true);
    x = layer_norm(p, lp + ".self.ln", num::add(x, drop(a, mode)));
    Var c = multi_head(p, lp + ".cross.qkv", lp + ".cross.out", x, memory.out, tgt_in.layout, memory.layout, cfg.heads);
    x = layer_norm(p, lp + ".cross.ln", num::add(x, drop(c, mode)));
    x = layer_norm(p, lp + ".ffn.ln", num::add(x, drop(feed_forward(p, lp + ".ffn", x, mode), mode)));
  }
  return linear(p, "proj", x);
}

double sequence_log_probability(const Seq2Seq& model, const std::vector<int>& src, const std::vector<int>& y, int bos) {
  if (y.empty()) throw std::invalid_argument("sequence_probability: empty target");
  std::vector<int> in{bos};
  in.insert(in.end(), y.begin(), y.end() - 1);
  Tape tape;
  Binder p(tape, model.params(), false);
  EncoderOutput mem = model.encode(p, Batch::pack({src}, 0), {});
  Tensor logp = num::log_softmax_rows(model.decode(p, mem, Batch::pack({in}, 0), {}).value());
  double total = 0.0;
  for (std::size_t t = 0; t < y.size(); ++t) total += logp.at(t, std::size_t(y[t]));
  return total;
}

double sequence_probability(const Seq2Seq& model, const std::vector<int>& src, const std::vector<int>& y, int bos) {
  return std::exp(sequence_log_probability(model, src, y, bos));
}

}  // namespace mog::nn
