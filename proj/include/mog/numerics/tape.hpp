#pragma once

#include <cstddef>
#include <functional>
#include <string>
#include <deque>
#include <vector>

#include "mog/numerics/tensor.hpp"

namespace mog::num {

class Tape;

/// Handle to a value recorded on a Tape. Cheap to copy; valid while the tape lives.
class Var {
 public:
  Var() = default;
  Var(Tape* tape, std::size_t id) : tape_(tape), id_(id) {}

  Tape& tape() const { return *tape_; }
  std::size_t id() const { return id_; }
  bool valid() const { return tape_ != nullptr; }

  const Tensor& value() const;
  const Shape& shape() const { return value().shape(); }
  std::size_t rows() const { return value().rows(); }
  std::size_t cols() const { return value().cols(); }
  bool requires_grad() const;

 private:
  Tape* tape_ = nullptr;
  std::size_t id_ = 0;
};

/// Ordered record of primitive ops. Values are appended in evaluation order and
/// backward() replays the record in reverse, accumulating gradients.
///
/// A tape is single-owner; independent tapes share no mutable state.
class Tape {
 public:
  using Backward = std::function<void(Tape&, std::size_t self)>;

  Tape() = default;
  Tape(const Tape&) = delete;
  Tape& operator=(const Tape&) = delete;

  Var constant(Tensor value);
  Var variable(Tensor value);
  /// Records a leaf that reads `value` in place. The tensor must outlive the tape.
  Var parameter(const Tensor& value);
  Var constant_ref(const Tensor& value);

  /// Appends an op output. `backward` is dropped when no input needs a gradient.
  Var record(std::string op, Tensor value, bool requires_grad, Backward backward);

  void backward(Var scalar_output);

  const Tensor& value(std::size_t id) const;
  bool requires_grad(std::size_t id) const { return nodes_[id].requires_grad; }
  /// Gradient of the last backward() target w.r.t. `v`; zeros if `v` was not reached.
  Tensor grad(Var v) const;
  const Tensor* grad_if_any(std::size_t id) const;

  /// Adds `g` into the gradient slot of `id` (no-op for constants).
  void accumulate(std::size_t id, const Tensor& g);
  /// Gradient slot for `id`, zero-initialised on first use.
  Tensor& grad_slot(std::size_t id);
  const Tensor& upstream(std::size_t id) const { return nodes_[id].grad; }

  std::size_t size() const { return nodes_.size(); }
  const std::string& op_name(std::size_t id) const { return nodes_[id].op; }

 private:
  struct Node {
    std::string op;
    Tensor owned;
    const Tensor* borrowed = nullptr;
    Tensor grad;
    bool requires_grad = false;
    Backward backward;
  };

  // deque keeps references returned by value() stable while ops are appended
  std::deque<Node> nodes_;
};

}  // namespace mog::num
