#include "mog/numerics/tape.hpp"

namespace mog::num {

const Tensor& Var::value() const { return tape_->value(id_); }

bool Var::requires_grad() const { return tape_->requires_grad(id_); }

Var Tape::constant(Tensor value) {
  nodes_.push_back(Node{"constant", std::move(value), nullptr, {}, false, {}});
  return {this, nodes_.size() - 1};
}

Var Tape::variable(Tensor value) {
  nodes_.push_back(Node{"variable", std::move(value), nullptr, {}, true, {}});
  return {this, nodes_.size() - 1};
}

Var Tape::parameter(const Tensor& value) {
  nodes_.push_back(Node{"parameter", {}, &value, {}, true, {}});
  return {this, nodes_.size() - 1};
}

Var Tape::constant_ref(const Tensor& value) {
  nodes_.push_back(Node{"constant", {}, &value, {}, false, {}});
  return {this, nodes_.size() - 1};
}

Var Tape::record(std::string op, Tensor value, bool requires_grad, Backward backward) {
  Node node{std::move(op), std::move(value), nullptr, {}, requires_grad, {}};
  if (requires_grad) node.backward = std::move(backward);
  nodes_.push_back(std::move(node));
  return {this, nodes_.size() - 1};
}

const Tensor& Tape::value(std::size_t id) const {
  const Node& n = nodes_[id];
  return n.borrowed ? *n.borrowed : n.owned;
}

void Tape::backward(Var scalar_output) {
  if (scalar_output.value().size() != 1) {
    throw DimensionError("backward() needs a scalar output, got shape " + to_string(scalar_output.shape()));
  }
  for (auto& n : nodes_) n.grad = Tensor();
  const std::size_t root = scalar_output.id();
  if (!nodes_[root].requires_grad) return;
  nodes_[root].grad = Tensor(value(root).shape(), 1.0);
  for (std::size_t i = root + 1; i-- > 0;) {
    Node& n = nodes_[i];
    if (n.backward && !n.grad.empty()) n.backward(*this, i);
  }
}

Tensor Tape::grad(Var v) const {
  const Node& n = nodes_[v.id()];
  if (n.grad.empty()) return Tensor::zeros_like(value(v.id()));
  return n.grad;
}

const Tensor* Tape::grad_if_any(std::size_t id) const {
  const Node& n = nodes_[id];
  return n.grad.empty() ? nullptr : &n.grad;
}

void Tape::accumulate(std::size_t id, const Tensor& g) {
  Node& n = nodes_[id];
  if (!n.requires_grad) return;
  if (n.grad.empty()) {
    require_same_shape(value(id), g, "gradient accumulation");
    n.grad = g;
  } else {
    n.grad += g;
  }
}

Tensor& Tape::grad_slot(std::size_t id) {
  Node& n = nodes_[id];
  if (n.grad.empty()) n.grad = Tensor::zeros_like(value(id));
  return n.grad;
}

}  // namespace mog::num
