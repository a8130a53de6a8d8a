#include "mog/train/optim.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace mog::train {

double learning_rate(std::size_t step, std::size_t model_dim, std::size_t warmup) {
  if (step == 0) throw std::invalid_argument("learning_rate: steps count from 1");
  if (warmup == 0) throw std::invalid_argument("learning_rate: warmup must be >= 1");
  const double s = double(step), w = double(warmup);
  return std::pow(double(model_dim), -0.5) * std::min(std::pow(s, -0.5), s * std::pow(w, -1.5));
}

void Adam::step(nn::ParamStore& params, const std::map<std::string, num::Tensor>& grads, double lr) {
  for (const auto& [name, g] : grads) {
    if (!params.contains(name)) throw std::invalid_argument("adam: gradient for unknown parameter '" + name + "'");
    num::require_same_shape(params.get(name), g, "adam");
  }
  ++t_;
  const double c1 = 1.0 - std::pow(opts_.beta1, double(t_));
  const double c2 = 1.0 - std::pow(opts_.beta2, double(t_));
  for (auto& [name, w] : params.all()) {
    auto it = grads.find(name);
    auto& st = state_[name];
    if (st.m.empty()) st.m = st.v = num::Tensor::zeros_like(w);
    for (std::size_t i = 0; i < w.size(); ++i) {
      const double g = it == grads.end() ? 0.0 : it->second[i];
      st.m[i] = opts_.beta1 * st.m[i] + (1.0 - opts_.beta1) * g;
      st.v[i] = opts_.beta2 * st.v[i] + (1.0 - opts_.beta2) * g * g;
      w[i] -= lr * (st.m[i] / c1) / (std::sqrt(st.v[i] / c2) + opts_.epsilon);
    }
  }
}

}  // namespace mog::train
