#pragma once

#include <map>
#include <string>

#include "mog/nn/params.hpp"

namespace mog::train {

/// Inverse-square-root schedule with linear warmup; peaks at `step == warmup`.
double learning_rate(std::size_t step, std::size_t model_dim, std::size_t warmup);

struct AdamOptions {
  double beta1 = 0.9;
  double beta2 = 0.98;
  double epsilon = 1e-9;
};

class Adam {
 public:
  explicit Adam(AdamOptions opts = {}) : opts_(opts) {}

  /// One bias-corrected update of every tensor in `params` that has an entry
  /// in `grads`. Missing entries are treated as zero gradients.
  void step(nn::ParamStore& params, const std::map<std::string, num::Tensor>& grads, double lr);
  std::size_t steps() const { return t_; }

 private:
  struct Moments {
    num::Tensor m, v;
  };
  AdamOptions opts_;
  std::size_t t_ = 0;
  std::map<std::string, Moments> state_;
};

}  // namespace mog::train
