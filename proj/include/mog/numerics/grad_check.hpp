#pragma once

#include <functional>
#include <vector>

#include "mog/numerics/tape.hpp"

namespace mog::num {

/// Builds a scalar on `tape` from the supplied input variables.
using ScalarFn = std::function<Var(Tape& tape, std::span<const Var> inputs)>;

struct GradCheckResult {
  double max_relative_error = 0.0;
  double max_absolute_error = 0.0;
  std::size_t components = 0;
};

/// Compares reverse-mode gradients against central differences for every
/// component of every input. Relative error is
/// |autodiff - central| / (|central| + 1e-8).
GradCheckResult grad_check(const ScalarFn& f, const std::vector<Tensor>& inputs, double step = 1e-5);

/// Single-input convenience form; returns the max relative error.
double grad_check(const std::function<Var(Tape&, Var)>& f, const Tensor& x, double step = 1e-5);

}  // namespace mog::num
