#pragma once

#include <random>
#include <string>
#include <vector>

#include "mog/nn/params.hpp"
#include "mog/numerics/ops.hpp"

namespace mog::nn {

/// Sentences of a batch laid out batch-major, padded to a common length.
struct SeqLayout {
  std::size_t batch = 1;
  std::size_t len = 1;
  std::vector<std::size_t> lengths;  // valid tokens per sentence
};

/// Dropout switch shared by every sublayer of one forward pass.
struct RunMode {
  bool training = false;
  double dropout = 0.0;
  std::mt19937_64* rng = nullptr;
};

Var drop(Var x, const RunMode& mode);

// Registration. Keys are projected without a bias: a key bias only shifts each
// score row by a constant, which softmax removes.
void add_projections(ParamStore& store, const std::string& prefix, std::size_t d, std::size_t inner,
                     std::mt19937_64& rng);
void add_output(ParamStore& store, const std::string& prefix, std::size_t inner, std::size_t d,
                std::mt19937_64& rng);
void add_layer_norm(ParamStore& store, const std::string& prefix, std::size_t d);
void add_ffn(ParamStore& store, const std::string& prefix, std::size_t d, std::size_t hidden,
             std::mt19937_64& rng);
void add_linear(ParamStore& store, const std::string& prefix, std::size_t in, std::size_t out,
                std::mt19937_64& rng);

/// Multi-head attention: projections read from `proj.*`, the output map from
/// `out.*`. Keys and values both come from `source`.
Var multi_head(Binder& p, const std::string& proj, const std::string& out, Var query, Var source,
               const SeqLayout& query_layout, const SeqLayout& source_layout, std::size_t heads,
               bool causal = false);

Var layer_norm(Binder& p, const std::string& prefix, Var x);
Var feed_forward(Binder& p, const std::string& prefix, Var x, const RunMode& mode);
Var linear(Binder& p, const std::string& prefix, Var x);

enum class PositionKind { sinusoidal, none, random };

std::string to_string(PositionKind kind);
PositionKind parse_position_kind(const std::string& text);

/// [len x d] table added to the scaled embeddings.
Tensor positional_encoding(PositionKind kind, std::size_t len, std::size_t d, std::uint64_t seed);

/// Rows 0..len-1 of `table`, tiled over the batch.
Tensor tile_positions(const Tensor& table, const SeqLayout& layout);

}  // namespace mog::nn
