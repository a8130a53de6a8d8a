#pragma once

#include <random>

#include "mog/numerics/tensor.hpp"

namespace mog::nn {

using num::Tensor;

/// One gate's affine map: W h_below + U h_prev + b, with W, U square.
struct GateWeights {
  Tensor w, u, b;
  static GateWeights zeros(std::size_t d);
  static GateWeights random(std::size_t d, std::mt19937_64& rng, double range = 0.5);
};

Tensor gate_preactivation(const GateWeights& g, const Tensor& h_below, const Tensor& h_prev);

struct GruParams {
  GateWeights z, r, candidate;
  static GruParams zeros(std::size_t d);
  static GruParams random(std::size_t d, std::mt19937_64& rng);
};

/// Standard form: h = (1-z) h_prev + z tanh(W x + U (r h_prev) + b).
/// With `direct_mix` the last line mixes h_prev with h_below directly and the
/// candidate state is unused.
Tensor gru_cell(const Tensor& h_below, const Tensor& h_prev, const GruParams& params, bool direct_mix = false);

struct LstmParams {
  GateWeights input, forget, output, update;
  static LstmParams zeros(std::size_t d);
  static LstmParams random(std::size_t d, std::mt19937_64& rng);
};

struct LstmState {
  Tensor h, c;
};

LstmState lstm_cell(const Tensor& h_below, const Tensor& h_prev, const Tensor& c_prev, const LstmParams& params);

}  // namespace mog::nn
