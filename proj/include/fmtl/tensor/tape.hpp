#pragma once

#include <cstddef>
#include <functional>
#include <map>
#include <string>
#include <vector>

#include "fmtl/tensor/matrix.hpp"

namespace fmtl {

class Tape;
class Gradients;

// Handle to a node recorded on a Tape. Cheap to copy; only valid while the
// owning tape is alive.
class Var {
 public:
  Var() = default;
  Var(Tape* tape, std::size_t id) : tape_(tape), id_(id) {}

  const Matrix& value() const;
  std::size_t id() const { return id_; }
  Tape* tape() const { return tape_; }
  std::size_t rows() const { return value().rows(); }
  std::size_t cols() const { return value().cols(); }

 private:
  Tape* tape_ = nullptr;
  std::size_t id_ = 0;
};

// Per-node adjoints during a backward sweep. An empty matrix means "zero".
class Adjoints {
 public:
  explicit Adjoints(std::size_t n) : grads_(n) {}
  // Adds delta into the adjoint of node `id`.
  void accumulate(std::size_t id, const Matrix& delta);
  void accumulate(std::size_t id, Matrix&& delta);
  const Matrix& get(std::size_t id) const { return grads_[id]; }
  Matrix take(std::size_t id) { return std::move(grads_[id]); }

 private:
  std::vector<Matrix> grads_;
};

// Called with the tape, the adjoint of the node's output, and the adjoint
// store to accumulate input contributions into.
using BackwardFn = std::function<void(const Tape&, const Matrix& grad_out, Adjoints& adj)>;

// Linear record of a forward computation. Nodes are appended in evaluation
// order, so node ids are a topological order and the backward sweep is a
// plain reverse iteration.
class Tape {
 public:
  Tape() = default;
  Tape(const Tape&) = delete;
  Tape& operator=(const Tape&) = delete;

  // Leaf that gradients are reported for. Names must be unique per tape.
  Var parameter(const std::string& name, Matrix value);
  Var constant(Matrix value);
  Var record(Matrix value, std::vector<std::size_t> inputs, BackwardFn backward);

  const Matrix& value(std::size_t id) const { return nodes_[id].value; }
  std::size_t size() const { return nodes_.size(); }
  bool has_parameter(const std::string& name) const { return params_.count(name) != 0; }
  Var parameter_var(const std::string& name);
  const std::vector<std::size_t>& inputs(std::size_t id) const { return nodes_[id].inputs; }

 private:
  friend class Gradients;
  friend Gradients backward(Tape& tape, Var output);

  struct Node {
    Matrix value;
    std::vector<std::size_t> inputs;
    BackwardFn backward;  // empty for leaves
  };
  std::vector<Node> nodes_;
  std::map<std::string, std::size_t> params_;
};

// Result of a backward sweep: gradient per named parameter plus the order in
// which recorded operations were visited.
class Gradients {
 public:
  // Throws LookupError when `name` was never registered on the tape.
  const Matrix& at(const std::string& name) const;
  bool contains(const std::string& name) const { return grads_.count(name) != 0; }
  const std::map<std::string, Matrix>& all() const { return grads_; }
  const std::vector<std::size_t>& visit_order() const { return visit_order_; }

 private:
  friend Gradients backward(Tape& tape, Var output);
  std::map<std::string, Matrix> grads_;
  std::vector<std::size_t> visit_order_;
};

// Reverse-mode sweep from a 1x1 output. Parameters that do not influence the
// output receive zero gradients of their own shape.
Gradients backward(Tape& tape, Var output);

}  // namespace fmtl
