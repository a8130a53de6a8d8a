#include "mog/nn/recurrent.hpp"

#include <cmath>

namespace mog::nn {

namespace {

double sigm(double x) { return 1.0 / (1.0 + std::exp(-x)); }

Tensor matvec(const Tensor& m, const Tensor& x) {
  if (m.rank() != 2 || m.cols() != x.size()) throw num::DimensionError("matvec: shape mismatch");
  Tensor out({m.rows()});
  for (std::size_t i = 0; i < m.rows(); ++i) {
    double s = 0.0;
    for (std::size_t j = 0; j < m.cols(); ++j) s += m.at(i, j) * x[j];
    out[i] = s;
  }
  return out;
}

template <class F>
Tensor map(const Tensor& a, F f) {
  Tensor out = a;
  for (double& x : out.data()) x = f(x);
  return out;
}

}  // namespace

GateWeights GateWeights::zeros(std::size_t d) { return {Tensor({d, d}), Tensor({d, d}), Tensor({d})}; }

GateWeights GateWeights::random(std::size_t d, std::mt19937_64& rng, double range) {
  std::uniform_real_distribution<double> u(-range, range);
  GateWeights g = zeros(d);
  for (Tensor* t : {&g.w, &g.u, &g.b})
    for (double& x : t->data()) x = u(rng);
  return g;
}

Tensor gate_preactivation(const GateWeights& g, const Tensor& h_below, const Tensor& h_prev) {
  num::require_same_shape(h_below, h_prev, "gate_preactivation");
  Tensor out = matvec(g.w, h_below);
  out += matvec(g.u, h_prev);
  out += g.b;
  return out;
}

GruParams GruParams::zeros(std::size_t d) { return {GateWeights::zeros(d), GateWeights::zeros(d), GateWeights::zeros(d)}; }

GruParams GruParams::random(std::size_t d, std::mt19937_64& rng) {
  GruParams p;
  p.z = GateWeights::random(d, rng);
  p.r = GateWeights::random(d, rng);
  p.candidate = GateWeights::random(d, rng);
  return p;
}

Tensor gru_cell(const Tensor& h_below, const Tensor& h_prev, const GruParams& params, bool direct_mix) {
  num::require_same_shape(h_below, h_prev, "gru_cell");
  const Tensor z = map(gate_preactivation(params.z, h_below, h_prev), sigm);
  Tensor mix = h_below;
  if (!direct_mix) {
    const Tensor r = map(gate_preactivation(params.r, h_below, h_prev), sigm);
    Tensor reset = h_prev;
    for (std::size_t i = 0; i < reset.size(); ++i) reset[i] *= r[i];
    mix = map(gate_preactivation(params.candidate, h_below, reset), [](double x) { return std::tanh(x); });
  }
  Tensor h = h_prev;
  for (std::size_t i = 0; i < h.size(); ++i) h[i] = (1.0 - z[i]) * h_prev[i] + z[i] * mix[i];
  return h;
}

LstmParams LstmParams::zeros(std::size_t d) {
  return {GateWeights::zeros(d), GateWeights::zeros(d), GateWeights::zeros(d), GateWeights::zeros(d)};
}

LstmParams LstmParams::random(std::size_t d, std::mt19937_64& rng) {
  LstmParams p;
  p.input = GateWeights::random(d, rng);
  p.forget = GateWeights::random(d, rng);
  p.output = GateWeights::random(d, rng);
  p.update = GateWeights::random(d, rng);
  return p;
}

LstmState lstm_cell(const Tensor& h_below, const Tensor& h_prev, const Tensor& c_prev, const LstmParams& params) {
  num::require_same_shape(h_below, h_prev, "lstm_cell");
  num::require_same_shape(h_prev, c_prev, "lstm_cell");
  const Tensor in = map(gate_preactivation(params.input, h_below, h_prev), sigm);
  const Tensor f = map(gate_preactivation(params.forget, h_below, h_prev), sigm);
  const Tensor o = map(gate_preactivation(params.output, h_below, h_prev), sigm);
  const Tensor u = map(gate_preactivation(params.update, h_below, h_prev), [](double x) { return std::tanh(x); });
  LstmState s{h_prev, c_prev};
  for (std::size_t i = 0; i < s.c.size(); ++i) {
    s.c[i] = in[i] * u[i] + f[i] * c_prev[i];
    s.h[i] = o[i] * std::tanh(s.c[i]);
  }
  return s;
}

}  // namespace mog::nn
