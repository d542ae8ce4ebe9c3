#pragma once

#include <cstddef>
#include <deque>
#include <functional>
#include <vector>

#include "lrnerv/ops.hpp"
#include "lrnerv/tensor.hpp"

namespace lrnerv {

class GradTape;

// Handle to a value recorded on a GradTape.
class Var {
 public:
  Var() = default;

  const Tensor& value() const;
  const Shape& shape() const { return value().shape(); }
  std::size_t id() const { return id_; }
  GradTape* tape() const { return tape_; }

 private:
  friend class GradTape;
  Var(GradTape* tape, std::size_t id) : tape_(tape), id_(id) {}

  GradTape* tape_ = nullptr;
  std::size_t id_ = 0;
};

// View handed to an op's adjoint while the tape is replayed.
class BackwardContext {
 public:
  const Tensor& grad_output() const { return *grad_output_; }
  const Tensor& output() const { return *output_; }
  const Tensor& input(std::size_t i) const;
  // Gradient buffer of input i to accumulate into, or nullptr when that
  // input does not lead to any parameter.
  Tensor* input_grad(std::size_t i);

 private:
  friend class GradTape;
  BackwardContext(GradTape& tape, std::size_t node) : tape_(tape), node_(node) {}

  GradTape& tape_;
  std::size_t node_;
  const Tensor* grad_output_ = nullptr;
  const Tensor* output_ = nullptr;
};

using BackwardFn = std::function<void(BackwardContext&)>;

// Records primitive operations in execution order. Node ids are therefore a
// topological order and backward() replays them from the loss downwards.
class GradTape {
 public:
  GradTape() = default;
  GradTape(const GradTape&) = delete;
  GradTape& operator=(const GradTape&) = delete;

  Var constant(Tensor value);
  // Leaf whose gradient is returned by backward(), in registration order.
  Var parameter(Tensor value);
  Var record(Tensor value, std::vector<Var> inputs, BackwardFn backward);

  const Tensor& value(Var v) const;
  bool needs_grad(Var v) const;

  // Adjoints of a scalar loss with respect to every registered parameter.
  // Parameters the loss does not depend on receive zeros. A tape can be
  // replayed only once.
  std::vector<Tensor> backward(Var loss);

  std::size_t size() const { return nodes_.size(); }
  std::size_t parameter_count() const { return params_.size(); }
  bool consumed() const { return consumed_; }

 private:
  friend class BackwardContext;

  struct Node {
    Tensor value;
    Tensor grad;
    bool needs_grad = false;
    std::vector<std::size_t> inputs;
    BackwardFn backward;
  };

  std::size_t check_owned(Var v) const;

  std::deque<Node> nodes_;
  std::vector<std::size_t> params_;
  bool consumed_ = false;
};

// Differentiable operations. Shapes must match exactly; there is no
// broadcasting beyond the scalar variants.
namespace ad {

Var add(Var a, Var b);
Var sub(Var a, Var b);
Var mul(Var a, Var b);
Var div(Var a, Var b);
Var add_scalar(Var a, double c);
Var mul_scalar(Var a, double c);
Var abs(Var a);
Var sum(Var a);
Var mean(Var a);
Var reshape(Var a, Shape shape);

Var conv2d(Var x, Var w, Padding pad);
Var conv2d(Var x, Var w, Var bias, Padding pad);
Var linear(Var x, Var w, Var bias);
Var pixel_shuffle(Var x, std::size_t s);
Var gelu(Var x);
Var relu(Var x);
Var sigmoid(Var x);
Var separable_filter_valid(Var x, const Tensor& window);

}  // namespace ad
}  // namespace lrnerv
