#include "mog/numerics/grad_check.hpp"

#include <algorithm>
#include <cmath>

namespace mog::num {

namespace {

double evaluate(const ScalarFn& f, const std::vector<Tensor>& inputs) {
  Tape tape;
  std::vector<Var> vars;
  for (const auto& t : inputs) vars.push_back(tape.constant(t));
  Var out = f(tape, vars);
  if (out.value().size() != 1) throw DimensionError("grad_check: function output is not scalar");
  return out.value()[0];
}

}  // namespace

GradCheckResult grad_check(const ScalarFn& f, const std::vector<Tensor>& inputs, double step) {
  Tape tape;
  std::vector<Var> vars;
  for (const auto& t : inputs) vars.push_back(tape.variable(t));
  Var out = f(tape, vars);
  if (out.value().size() != 1) throw DimensionError("grad_check: function output is not scalar");
  tape.backward(out);

  GradCheckResult result;
  std::vector<Tensor> probe = inputs;
  for (std::size_t k = 0; k < inputs.size(); ++k) {
    const Tensor analytic = tape.grad(vars[k]);
    for (std::size_t i = 0; i < inputs[k].size(); ++i) {
      const double original = probe[k][i];
      probe[k][i] = original + step;
      const double up = evaluate(f, probe);
      probe[k][i] = original - step;
      const double down = evaluate(f, probe);
      probe[k][i] = original;
      const double central = (up - down) / (2.0 * step);
      const double abs_err = std::abs(analytic[i] - central);
      result.max_absolute_error = std::max(result.max_absolute_error, abs_err);
      result.max_relative_error = std::max(result.max_relative_error, abs_err / (std::abs(central) + 1e-8));
      ++result.components;
    }
  }
  return result;
}

double grad_check(const std::function<Var(Tape&, Var)>& f, const Tensor& x, double step) {
  ScalarFn wrapped = [&f](Tape& tape, std::span<const Var> in) { return f(tape, in[0]); };
  return grad_check(wrapped, {x}, step).max_relative_error;
}

}  // namespace mog::num
