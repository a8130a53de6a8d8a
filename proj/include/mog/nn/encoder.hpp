#pragma once

#include <array>
#include <string>
#include <vector>

#include "mog/nn/layers.hpp"

namespace mog::nn {

enum class Fusion { sum, weight_gate, self_gate };
/// `transformer` is the plain post-norm encoder; `graph` splits every layer's
/// representation into previous and incremental parts.
enum class Architecture { transformer, graph };

std::string to_string(Fusion fusion);
Fusion parse_fusion(const std::string& text);
std::string to_string(Architecture arch);
Architecture parse_architecture(const std::string& text);

struct EncoderConfig {
  Architecture architecture = Architecture::graph;
  std::size_t layers = 2;
  std::size_t model_dim = 64;
  std::size_t heads = 4;
  std::size_t ffn_dim = 256;
  Fusion fusion = Fusion::weight_gate;
  bool half_dim = false;
  bool shared_qkv = false;
  PositionKind position_encoding = PositionKind::sinusoidal;
  double dropout = 0.0;
  std::uint64_t seed = 1;

  /// Width the split attention parts work in.
  std::size_t attention_dim() const { return half_dim ? model_dim / 2 : model_dim; }
  void validate() const;
};

/// Mean weight-gate activation of one layer.
struct GateRecord {
  std::size_t layer = 0;  // 1-based
  double mean_w = 0.0;    // over valid tokens and dims of the whole batch
  std::vector<double> per_sentence;
};

struct SplitRepresentation {
  Var previous, incremental, full;
};

struct EncoderOutput {
  Var out;
  SeqLayout layout;
  std::vector<SplitRepresentation> layers;  // graph architecture only
  std::vector<GateRecord> gates;            // weight-gate fusion only
};

/// The three attention groups of one layer plus the low-order linear path.
/// Each attention part is followed by residual (from its query) and layer norm.
struct SplitParts {
  Var high, middle_a, middle_b, low;
  Var middle() const { return num::add(middle_a, middle_b); }
};

SplitParts split_attention_layer(Binder& p, const std::string& prefix, const EncoderConfig& cfg, Var prev,
                                 Var incr, const SeqLayout& layout, const RunMode& mode);

struct Fused {
  Var incremental;  // new information of the layer
  Var full;         // prev + incremental
  Var w;            // gate field (weight-gate only)
};

Fused fuse_sum(Var high, Var middle, Var low, Var prev);
Fused fuse_weight_gate(Var high, Var middle, Var low, Var prev);
/// `parts` in the order low, middle_a, middle_b, high. Projections read from
/// `prefix.*`; scores are scaled by 1/d_k.
Fused fuse_self_gate(Binder& p, const std::string& prefix, const std::array<Var, 4>& parts, Var prev);

/// Per-sentence and batch mean of a gate field over valid rows.
GateRecord summarize_gate(const Tensor& w, const SeqLayout& layout, std::size_t layer);

void add_encoder(ParamStore& store, const EncoderConfig& cfg, std::mt19937_64& rng, const std::string& prefix = "enc");

/// Runs the layer stack on already embedded input. For the graph architecture
/// layer 1 starts from prev = 0, incr = input; the middle and low parts vanish
/// there because every term they read from prev is absent.
EncoderOutput encode(Binder& p, const EncoderConfig& cfg, Var input, const SeqLayout& layout, const RunMode& mode,
                     const std::string& prefix = "enc");

/// Padded batch of token id sequences.
struct Batch {
  SeqLayout layout;
  std::vector<int> ids;
  static Batch pack(const std::vector<std::vector<int>>& seqs, int pad_id);
};

struct ModelConfig {
  EncoderConfig encoder;
  std::size_t vocab_size = 24;
  std::size_t max_len = 64;  // position table rows
};

/// Encoder (plain or graph) with a standard post-norm decoder and separate
/// source/target embeddings over one vocabulary.
class Seq2Seq {
 public:
  explicit Seq2Seq(ModelConfig cfg);

  const ModelConfig& config() const { return cfg_; }
  ParamStore& params() { return params_; }
  const ParamStore& params() const { return params_; }
  const Tensor& positions() const { return pe_; }

  Var embed(Binder& p, const std::string& table, const Batch& batch) const;
  EncoderOutput encode(Binder& p, const Batch& src, const RunMode& mode) const;
  /// Logits [batch*len x vocab] for every target-input position.
  Var decode(Binder& p, const EncoderOutput& memory, const Batch& tgt_in, const RunMode& mode) const;

 private:
  ModelConfig cfg_;
  ParamStore params_;
  Tensor pe_;
};

/// log p(y | x) = sum_t log p(y_t | y_<t, x), fed from `bos`; no end token is scored.
double sequence_log_probability(const Seq2Seq& model, const std::vector<int>& src, const std::vector<int>& y, int bos);
double sequence_probability(const Seq2Seq& model, const std::vector<int>& src, const std::vector<int>& y, int bos);

}  // namespace mog::nn
