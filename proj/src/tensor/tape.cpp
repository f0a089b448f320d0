#include "fmtl/tensor/tape.hpp"

#include "fmtl/core/errors.hpp"

namespace fmtl {

const Matrix& Var::value() const {
  if (tape_ == nullptr) throw LookupError("Var: not attached to a tape");
  return tape_->value(id_);
}

void Adjoints::accumulate(std::size_t id, const Matrix& delta) {
  Matrix& g = grads_[id];
  if (g.empty()) {
    g = delta;
  } else {
    g += delta;
  }
}

void Adjoints::accumulate(std::size_t id, Matrix&& delta) {
  Matrix& g = grads_[id];
  if (g.empty()) {
    g = std::move(delta);
  } else {
    g += delta;
  }
}

Var Tape::parameter(const std::string& name, Matrix value) {
  if (params_.count(name) != 0) throw ValidationError("Tape: duplicate parameter '" + name + "'");
  nodes_.push_back(Node{std::move(value), {}, {}});
  const std::size_t id = nodes_.size() - 1;
  params_.emplace(name, id);
  return Var(this, id);
}

Var Tape::constant(Matrix value) {
  nodes_.push_back(Node{std::move(value), {}, {}});
  return Var(this, nodes_.size() - 1);
}

Var Tape::record(Matrix value, std::vector<std::size_t> inputs, BackwardFn backward) {
  nodes_.push_back(Node{std::move(value), std::move(inputs), std::move(backward)});
  return Var(this, nodes_.size() - 1);
}

Var Tape::parameter_var(const std::string& name) {
  auto it = params_.find(name);
  if (it == params_.end()) throw LookupError("Tape: unknown parameter '" + name + "'");
  return Var(this, it->second);
}

const Matrix& Gradients::at(const std::string& name) const {
  auto it = grads_.find(name);
  if (it == grads_.end()) throw LookupError("Gradients: parameter '" + name + "' not recorded");
  return it->second;
}

Gradients backward(Tape& tape, Var output) {
  if (output.tape() != &tape) throw LookupError("backward: output belongs to another tape");
  const Matrix& out = tape.value(output.id());
  if (out.rows() != 1 || out.cols() != 1) {
    throw ShapeError("backward: output must be scalar, got " + out.shape_string());
  }

  Adjoints adj(tape.size());
  adj.accumulate(output.id(), Matrix(1, 1, 1.0));

  Gradients result;
  for (std::size_t i = output.id() + 1; i-- > 0;) {
    const auto& node = tape.nodes_[i];
    if (!node.backward) continue;
    const Matrix& g = adj.get(i);
    if (g.empty()) continue;
    result.visit_order_.push_back(i);
    node.backward(tape, g, adj);
  }
  for (const auto& [name, id] : tape.params_) {
    Matrix g = adj.take(id);
    if (g.empty()) g = Matrix(tape.value(id).rows(), tape.value(id).cols());
    result.grads_.emplace(name, std::move(g));
  }
  return result;
}

}  // namespace fmtl
