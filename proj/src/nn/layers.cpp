#include "mog/nn/layers.hpp"

#include <cmath>
#include <stdexcept>

namespace mog::nn {

Var drop(Var x, const RunMode& mode) {
  if (!mode.training || mode.dropout <= 0.0) return x;
  if (mode.rng == nullptr) throw std::logic_error("dropout in training mode needs an rng");
  return num::dropout(x, mode.dropout, true, *mode.rng);
}

void add_projections(ParamStore& store, const std::string& prefix, std::size_t d, std::size_t inner,
                     std::mt19937_64& rng) {
  store.add(prefix + ".wq", xavier_uniform(d, inner, rng));
  store.add(prefix + ".bq", Tensor({inner}));
  store.add(prefix + ".wk", xavier_uniform(d, inner, rng));
  store.add(prefix + ".wv", xavier_uniform(d, inner, rng));
  store.add(prefix + ".bv", Tensor({inner}));
}

void add_output(ParamStore& store, const std::string& prefix, std::size_t inner, std::size_t d,
                std::mt19937_64& rng) {
  store.add(prefix + ".wo", xavier_uniform(inner, d, rng));
  store.add(prefix + ".bo", Tensor({d}));
}

void add_layer_norm(ParamStore& store, const std::string& prefix, std::size_t d) {
  store.add(prefix + ".g", Tensor({d}, 1.0));
  store.add(prefix + ".b", Tensor({d}));
}

void add_ffn(ParamStore& store, const std::string& prefix, std::size_t d, std::size_t hidden,
             std::mt19937_64& rng) {
  store.add(prefix + ".w1", xavier_uniform(d, hidden, rng));
  store.add(prefix + ".b1", Tensor({hidden}));
  store.add(prefix + ".w2", xavier_uniform(hidden, d, rng));
  store.add(prefix + ".b2", Tensor({d}));
}

void add_linear(ParamStore& store, const std::string& prefix, std::size_t in, std::size_t out,
                std::mt19937_64& rng) {
  store.add(prefix + ".w", xavier_uniform(in, out, rng));
  store.add(prefix + ".b", Tensor({out}));
}

Var multi_head(Binder& p, const std::string& proj, const std::string& out, Var query, Var source,
               const SeqLayout& query_layout, const SeqLayout& source_layout, std::size_t heads,
               bool causal) {
  if (query_layout.batch != source_layout.batch) throw num::DimensionError("multi_head: batch sizes differ");
  Var q = num::linear(query, p(proj + ".wq"), p(proj + ".bq"));
  Var k = num::matmul(source, p(proj + ".wk"));
  Var v = num::linear(source, p(proj + ".wv"), p(proj + ".bv"));
  num::AttentionLayout layout;
  layout.batch = query_layout.batch;
  layout.query_len = query_layout.len;
  layout.key_len = source_layout.len;
  layout.heads = heads;
  layout.causal = causal;
  layout.key_lengths = source_layout.lengths;
  Var o = num::attention_core(q, k, v, layout);
  return num::linear(o, p(out + ".wo"), p(out + ".bo"));
}

Var layer_norm(Binder& p, const std::string& prefix, Var x) {
  return num::layer_norm(x, p(prefix + ".g"), p(prefix + ".b"));
}

Var feed_forward(Binder& p, const std::string& prefix, Var x, const RunMode& mode) {
  Var h = num::relu(num::linear(x, p(prefix + ".w1"), p(prefix + ".b1")));
  return num::linear(drop(h, mode), p(prefix + ".w2"), p(prefix + ".b2"));
}

Var linear(Binder& p, const std::string& prefix, Var x) {
  return num::linear(x, p(prefix + ".w"), p(prefix + ".b"));
}

std::string to_string(PositionKind kind) {
  switch (kind) {
    case PositionKind::sinusoidal: return "sinusoidal";
    case PositionKind::none: return "none";
    case PositionKind::random: return "random";
  }
  return "?";
}

PositionKind parse_position_kind(const std::string& text) {
  if (text == "sinusoidal") return PositionKind::sinusoidal;
  if (text == "none") return PositionKind::none;
  if (text == "random") return PositionKind::random;
  throw std::invalid_argument("unknown position encoding '" + text + "'");
}

Tensor positional_encoding(PositionKind kind, std::size_t len, std::size_t d, std::uint64_t seed) {
  Tensor t({len, d});
  switch (kind) {
    case PositionKind::none:
      break;
    case PositionKind::sinusoidal:
      for (std::size_t pos = 0; pos < len; ++pos) {
        for (std::size_t i = 0; i < d; i += 2) {
          const double angle = double(pos) / std::pow(10000.0, double(i) / double(d));
          t.at(pos, i) = std::sin(angle);
          if (i + 1 < d) t.at(pos, i + 1) = std::cos(angle);
        }
      }
      break;
    case PositionKind::random: {
      std::mt19937_64 rng(seed);
      std::uniform_real_distribution<double> u(0.0, 1.0);
      for (double& x : t.data()) x = u(rng);
      break;
    }
  }
  return t;
}

Tensor tile_positions(const Tensor& table, const SeqLayout& layout) {
  if (layout.len > table.rows()) throw num::DimensionError("sentence longer than the position table");
  const std::size_t d = table.cols();
  Tensor out({layout.batch * layout.len, d});
  for (std::size_t b = 0; b < layout.batch; ++b)
    for (std::size_t t = 0; t < layout.len; ++t)
      std::copy(table.row(t).begin(), table.row(t).end(), out.row(b * layout.len + t).begin());
  return out;
}

}  // namespace mog::nn
