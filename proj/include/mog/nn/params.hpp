#pragma once

#include <cstdint>
#include <map>
#include <random>
#include <string>

#include "mog/numerics/tape.hpp"

namespace mog::nn {

using num::Tape;
using num::Tensor;
using num::Var;

/// Named parameter tensors. Ordered by name so iteration (and therefore
/// optimiser updates and checkpoints) is deterministic.
class ParamStore {
 public:
  Tensor& add(const std::string& name, Tensor init);
  bool contains(const std::string& name) const { return tensors_.count(name) != 0; }
  Tensor& get(const std::string& name);
  const Tensor& get(const std::string& name) const;

  std::map<std::string, Tensor>& all() { return tensors_; }
  const std::map<std::string, Tensor>& all() const { return tensors_; }
  /// Total number of scalars.
  std::size_t count() const;

 private:
  std::map<std::string, Tensor> tensors_;
};

/// Binds store entries to one tape, once each. With `trainable` false the
/// parameters enter as constants and nothing is recorded for backward.
class Binder {
 public:
  Binder(Tape& tape, const ParamStore& store, bool trainable = true)
      : tape_(tape), store_(store), trainable_(trainable) {}

  Var operator()(const std::string& name);
  /// Uses `value` for `name` instead of the stored tensor.
  void bind(const std::string& name, Var value);
  Tape& tape() { return tape_; }
  const ParamStore& store() const { return store_; }
  bool trainable() const { return trainable_; }
  const std::map<std::string, Var>& bound() const { return bound_; }

 private:
  Tape& tape_;
  const ParamStore& store_;
  bool trainable_;
  std::map<std::string, Var> bound_;
};

Tensor xavier_uniform(std::size_t rows, std::size_t cols, std::mt19937_64& rng);
Tensor normal(std::size_t rows, std::size_t cols, double stddev, std::mt19937_64& rng);

}  // namespace mog::nn
