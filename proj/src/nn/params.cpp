#include "mog/nn/params.hpp"

#include <cmath>
#include <stdexcept>

namespace mog::nn {

Tensor& ParamStore::add(const std::string& name, Tensor init) {
  auto [it, inserted] = tensors_.emplace(name, std::move(init));
  if (!inserted) throw std::logic_error("parameter '" + name + "' registered twice");
  return it->second;
}

Tensor& ParamStore::get(const std::string& name) {
  auto it = tensors_.find(name);
  if (it == tensors_.end()) throw std::out_of_range("no parameter named '" + name + "'");
  return it->second;
}

const Tensor& ParamStore::get(const std::string& name) const {
  auto it = tensors_.find(name);
  if (it == tensors_.end()) throw std::out_of_range("no parameter named '" + name + "'");
  return it->second;
}

std::size_t ParamStore::count() const {
  std::size_t n = 0;
  for (const auto& [_, t] : tensors_) n += t.size();
  return n;
}

Var Binder::operator()(const std::string& name) {
  auto it = bound_.find(name);
  if (it != bound_.end()) return it->second;
  const Tensor& t = store_.get(name);
  Var v = trainable_ ? tape_.parameter(t) : tape_.constant_ref(t);
  bound_.emplace(name, v);
  return v;
}

void Binder::bind(const std::string& name, Var value) {
  if (!store_.contains(name)) throw std::out_of_range("no parameter named '" + name + "'");
  num::require_same_shape(store_.get(name), value.value(), "Binder::bind");
  bound_[name] = value;
}

Tensor xavier_uniform(std::size_t rows, std::size_t cols, std::mt19937_64& rng) {
  const double limit = std::sqrt(6.0 / double(rows + cols));
  std::uniform_real_distribution<double> u(-limit, limit);
  Tensor t({rows, cols});
  for (double& x : t.data()) x = u(rng);
  return t;
}

Tensor normal(std::size_t rows, std::size_t cols, double stddev, std::mt19937_64& rng) {
  std::normal_distribution<double> n(0.0, stddev);
  Tensor t({rows, cols});
  for (double& x : t.data()) x = n(rng);
  return t;
}

}  // namespace mog::nn
