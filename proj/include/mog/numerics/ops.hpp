#pragma once

#include <cstdint>
#include <random>
#include <span>
#include <vector>

#include "mog/numerics/tape.hpp"

namespace mog::num {

// Differentiable primitives. All shapes are explicit; the only broadcast is a
// row vector added to every row of a matrix (add_row / linear).

Var matmul(Var a, Var b);
Var transpose(Var a);
Var add(Var a, Var b);
Var sub(Var a, Var b);
Var mul(Var a, Var b);
Var scale(Var a, double factor);
/// alpha * a + beta, elementwise.
Var affine(Var a, double alpha, double beta);
Var add_row(Var a, Var row);
Var linear(Var x, Var weight, Var bias);

Var sigmoid(Var a);
Var tanh(Var a);
Var relu(Var a);

/// Softmax along `axis` (0 = down columns, 1 or -1 = along rows) with max subtraction.
Var softmax(Var a, int axis = -1);
/// Normalises each row to zero mean / unit variance, then applies gain and bias.
Var layer_norm(Var x, Var gain, Var bias, double epsilon = 1e-5);

Var concat_cols(std::span<const Var> parts);
Var concat_rows(std::span<const Var> parts);
Var slice_cols(Var a, std::size_t begin, std::size_t count);

/// Inverted dropout. Identity when `training` is false or `rate` is 0.
Var dropout(Var a, double rate, bool training, std::mt19937_64& rng);

Var sum(Var a);
Var mean(Var a);

/// Row lookup: out[i] = table[ids[i]].
Var embedding(Var table, std::span<const int> ids);

/// Mean token cross-entropy over rows whose target is not `ignore_id`.
Var cross_entropy(Var logits, std::span<const int> targets, int ignore_id);

/// Stacks k equally shaped [n x d] parts into [n*k x d], row n*k + j taken from part j.
Var interleave_rows(std::span<const Var> parts);
/// Sums consecutive groups of `group` rows: [n*group x d] -> [n x d].
Var group_sum_rows(Var a, std::size_t group);

/// Batched multi-head scaled dot-product attention on projected inputs.
/// Rows are batch-major: row b * len + t.
struct AttentionLayout {
  std::size_t batch = 1;
  std::size_t query_len = 1;
  std::size_t key_len = 1;
  std::size_t heads = 1;
  /// Score multiplier; 0 means 1/sqrt(head_dim).
  double scale = 0.0;
  bool causal = false;
  /// Valid key count per batch entry; empty means all keys valid.
  std::vector<std::size_t> key_lengths;
};

Var attention_core(Var q, Var k, Var v, const AttentionLayout& layout);

// Non-differentiable helpers used by decoding and checks.
Tensor matmul(const Tensor& a, const Tensor& b);
Tensor transpose(const Tensor& a);
Tensor log_softmax_rows(const Tensor& a);

}  // namespace mog::num
