#include "lrnerv/autodiff.hpp"

#include <cmath>
#include <stdexcept>
#include <string>

namespace lrnerv {

const Tensor& Var::value() const {
  if (!tape_) throw std::logic_error("Var is not attached to a tape");
  return tape_->value(*this);
}

const Tensor& BackwardContext::input(std::size_t i) const {
  const auto& node = tape_.nodes_[node_];
  return tape_.nodes_[node.inputs.at(i)].value;
}

Tensor* BackwardContext::input_grad(std::size_t i) {
  auto& node = tape_.nodes_[node_];
  auto& in = tape_.nodes_[node.inputs.at(i)];
  if (!in.needs_grad) return nullptr;
  if (in.grad.size() != in.value.size() || in.grad.shape() != in.value.shape()) {
    in.grad = Tensor(in.value.shape());
  }
  return &in.grad;
}

std::size_t GradTape::check_owned(Var v) const {
  if (v.tape_ != this || v.id_ >= nodes_.size()) {
    throw std::invalid_argument("Var does not belong to this tape");
  }
  return v.id_;
}

Var GradTape::constant(Tensor value) {
  nodes_.push_back(Node{std::move(value), Tensor(), false, {}, nullptr});
  return Var(this, nodes_.size() - 1);
}

Var GradTape::parameter(Tensor value) {
  nodes_.push_back(Node{std::move(value), Tensor(), true, {}, nullptr});
  params_.push_back(nodes_.size() - 1);
  return Var(this, nodes_.size() - 1);
}

Var GradTape::record(Tensor value, std::vector<Var> inputs, BackwardFn backward) {
  if (consumed_) throw std::logic_error("cannot record on a consumed tape");
  Node node;
  node.value = std::move(value);
  node.inputs.reserve(inputs.size());
  for (const Var& in : inputs) {
    const std::size_t id = check_owned(in);
    node.inputs.push_back(id);
    node.needs_grad = node.needs_grad || nodes_[id].needs_grad;
  }
  if (node.needs_grad) node.backward = std::move(backward);
  nodes_.push_back(std::move(node));
  return Var(this, nodes_.size() - 1);
}

const Tensor& GradTape::value(Var v) const { return nodes_[check_owned(v)].value; }

bool GradTape::needs_grad(Var v) const { return nodes_[check_owned(v)].needs_grad; }

std::vector<Tensor> GradTape::backward(Var loss) {
  if (consumed_) throw std::logic_error("tape already consumed by a previous backward()");
  const std::size_t root = check_owned(loss);
  if (nodes_[root].value.size() != 1) {
    throw std::invalid_argument("backward: loss must be a scalar, got shape " +
                                shape_string(nodes_[root].value.shape()));
  }
  consumed_ = true;
  if (nodes_[root].needs_grad) {
    nodes_[root].grad = Tensor(nodes_[root].value.shape(), 1.0);
    for (std::size_t i = root + 1; i-- > 0;) {
      Node& node = nodes_[i];
      if (!node.backward || node.grad.empty()) continue;
      BackwardContext ctx(*this, i);
      ctx.grad_output_ = &node.grad;
      ctx.output_ = &node.value;
      node.backward(ctx);
    }
  }
  std::vector<Tensor> grads;
  grads.reserve(params_.size());
  for (std::size_t id : params_) {
    Node& p = nodes_[id];
    if (p.grad.shape() == p.value.shape() && p.grad.size() == p.value.size()) {
      grads.push_back(std::move(p.grad));
    } else {
      grads.emplace_back(p.value.shape());
    }
  }
  return grads;
}

namespace ad {
namespace {

GradTape& tape_of(Var a) {
  if (!a.tape()) throw std::logic_error("Var is not attached to a tape");
  return *a.tape();
}

void require_same_shape(const char* op, Var a, Var b) {
  if (a.shape() != b.shape()) {
    throw std::invalid_argument(std::string(op) + ": shape mismatch " +
                                shape_string(a.shape()) + " vs " + shape_string(b.shape()));
  }
}

// Elementwise unary op with derivative f'(x) evaluated from input and output.
template <typename F, typename DF>
Var unary(Var a, F f, DF df) {
  const Tensor& x = a.value();
  Tensor y(x.shape());
  for (std::size_t i = 0; i < x.size(); ++i) y[i] = f(x[i]);
  return tape_of(a).record(std::move(y), {a}, [df](BackwardContext& ctx) {
    Tensor* gx = ctx.input_grad(0);
    if (!gx) return;
    const Tensor& x = ctx.input(0);
    const Tensor& y = ctx.output();
    const Tensor& g = ctx.grad_output();
    for (std::size_t i = 0; i < x.size(); ++i) (*gx)[i] += g[i] * df(x[i], y[i]);
  });
}

}  // namespace

Var add(Var a, Var b) {
  require_same_shape("add", a, b);
  Tensor y(a.shape());
  for (std::size_t i = 0; i < y.size(); ++i) y[i] = a.value()[i] + b.value()[i];
  return tape_of(a).record(std::move(y), {a, b}, [](BackwardContext& ctx) {
    const Tensor& g = ctx.grad_output();
    for (std::size_t k = 0; k < 2; ++k) {
      if (Tensor* gi = ctx.input_grad(k)) {
        for (std::size_t i = 0; i < g.size(); ++i) (*gi)[i] += g[i];
      }
    }
  });
}

Var sub(Var a, Var b) {
  require_same_shape("sub", a, b);
  Tensor y(a.shape());
  for (std::size_t i = 0; i < y.size(); ++i) y[i] = a.value()[i] - b.value()[i];
  return tape_of(a).record(std::move(y), {a, b}, [](BackwardContext& ctx) {
    const Tensor& g = ctx.grad_output();
    if (Tensor* ga = ctx.input_grad(0)) {
      for (std::size_t i = 0; i < g.size(); ++i) (*ga)[i] += g[i];
    }
    if (Tensor* gb = ctx.input_grad(1)) {
      for (std::size_t i = 0; i < g.size(); ++i) (*gb)[i] -= g[i];
    }
  });
}

Var mul(Var a, Var b) {
  require_same_shape("mul", a, b);
  Tensor y(a.shape());
  for (std::size_t i = 0; i < y.size(); ++i) y[i] = a.value()[i] * b.value()[i];
  return tape_of(a).record(std::move(y), {a, b}, [](BackwardContext& ctx) {
    const Tensor& g = ctx.grad_output();
    const Tensor& av = ctx.input(0);
    const Tensor& bv = ctx.input(1);
    if (Tensor* ga = ctx.input_grad(0)) {
      for (std::size_t i = 0; i < g.size(); ++i) (*ga)[i] += g[i] * bv[i];
    }
    if (Tensor* gb = ctx.input_grad(1)) {
      for (std::size_t i = 0; i < g.size(); ++i) (*gb)[i] += g[i] * av[i];
    }
  });
}

Var div(Var a, Var b) {
  require_same_shape("div", a, b);
  Tensor y(a.shape());
  for (std::size_t i = 0; i < y.size(); ++i) y[i] = a.value()[i] / b.value()[i];
  return tape_of(a).record(std::move(y), {a, b}, [](BackwardContext& ctx) {
    const Tensor& g = ctx.grad_output();
    const Tensor& bv = ctx.input(1);
    const Tensor& y = ctx.output();
    if (Tensor* ga = ctx.input_grad(0)) {
      for (std::size_t i = 0; i < g.size(); ++i) (*ga)[i] += g[i] / bv[i];
    }
    if (Tensor* gb = ctx.input_grad(1)) {
      for (std::size_t i = 0; i < g.size(); ++i) (*gb)[i] -= g[i] * y[i] / bv[i];
    }
  });
}

Var add_scalar(Var a, double c) {
  return unary(a, [c](double x) { return x + c; }, [](double, double) { return 1.0; });
}

Var mul_scalar(Var a, double c) {
  return unary(a, [c](double x) { return x * c; }, [c](double, double) { return c; });
}

Var abs(Var a) {
  return unary(
      a, [](double x) { return std::abs(x); },
      [](double x, double) { return x > 0 ? 1.0 : (x < 0 ? -1.0 : 0.0); });
}

Var gelu(Var x) {
  return unary(
      x, [](double v) { return lrnerv::gelu(v); },
      [](double v, double) { return lrnerv::gelu_derivative(v); });
}

Var relu(Var x) {
  return unary(
      x, [](double v) { return v > 0.0 ? v : 0.0; },
      [](double v, double) { return v > 0.0 ? 1.0 : 0.0; });
}

Var sigmoid(Var x) {
  return unary(
      x, [](double v) { return lrnerv::sigmoid(v); },
      [](double, double y) { return y * (1.0 - y); });
}

Var sum(Var a) {
  double s = 0.0;
  for (double v : a.value().data()) s += v;
  return tape_of(a).record(Tensor::scalar(s), {a}, [](BackwardContext& ctx) {
    Tensor* ga = ctx.input_grad(0);
    if (!ga) return;
    const double g = ctx.grad_output()[0];
    for (std::size_t i = 0; i < ga->size(); ++i) (*ga)[i] += g;
  });
}

Var mean(Var a) {
  const std::size_t n = a.value().size();
  if (n == 0) throw std::invalid_argument("mean of an empty tensor");
  return mul_scalar(sum(a), 1.0 / static_cast<double>(n));
}

Var reshape(Var a, Shape shape) {
  Tensor y = a.value().reshaped(std::move(shape));
  return tape_of(a).record(std::move(y), {a}, [](BackwardContext& ctx) {
    Tensor* ga = ctx.input_grad(0);
    if (!ga) return;
    const Tensor& g = ctx.grad_output();
    for (std::size_t i = 0; i < g.size(); ++i) (*ga)[i] += g[i];
  });
}

Var conv2d(Var x, Var w, Padding pad) {
  Tensor y = lrnerv::conv2d(x.value(), w.value(), nullptr, pad);
  return tape_of(x).record(std::move(y), {x, w}, [pad](BackwardContext& ctx) {
    conv2d_backward(ctx.input(0), ctx.input(1), ctx.grad_output(), pad, ctx.input_grad(0),
                    ctx.input_grad(1), nullptr);
  });
}

Var conv2d(Var x, Var w, Var bias, Padding pad) {
  Tensor y = lrnerv::conv2d(x.value(), w.value(), &bias.value(), pad);
  return tape_of(x).record(std::move(y), {x, w, bias}, [pad](BackwardContext& ctx) {
    conv2d_backward(ctx.input(0), ctx.input(1), ctx.grad_output(), pad, ctx.input_grad(0),
                    ctx.input_grad(1), ctx.input_grad(2));
  });
}

Var linear(Var x, Var w, Var bias) {
  Tensor y = lrnerv::linear(x.value(), w.value(), &bias.value());
  return tape_of(x).record(std::move(y), {x, w, bias}, [](BackwardContext& ctx) {
    const Tensor& xv = ctx.input(0);
    const Tensor& wv = ctx.input(1);
    const Tensor& g = ctx.grad_output();
    const std::size_t out_dim = wv.dim(0), in_dim = wv.dim(1);
    if (Tensor* gx = ctx.input_grad(0)) {
      for (std::size_t o = 0; o < out_dim; ++o) {
        const double* row = wv.raw() + o * in_dim;
        for (std::size_t i = 0; i < in_dim; ++i) (*gx)[i] += g[o] * row[i];
      }
    }
    if (Tensor* gw = ctx.input_grad(1)) {
      for (std::size_t o = 0; o < out_dim; ++o) {
        double* row = gw->raw() + o * in_dim;
        for (std::size_t i = 0; i < in_dim; ++i) row[i] += g[o] * xv[i];
      }
    }
    if (Tensor* gb = ctx.input_grad(2)) {
      for (std::size_t o = 0; o < out_dim; ++o) (*gb)[o] += g[o];
    }
  });
}

Var pixel_shuffle(Var x, std::size_t s) {
  Tensor y = lrnerv::pixel_shuffle(x.value(), s);
  return tape_of(x).record(std::move(y), {x}, [s](BackwardContext& ctx) {
    Tensor* gx = ctx.input_grad(0);
    if (!gx) return;
    const Tensor back = pixel_unshuffle(ctx.grad_output(), s);
    for (std::size_t i = 0; i < back.size(); ++i) (*gx)[i] += back[i];
  });
}

Var separable_filter_valid(Var x, const Tensor& window) {
  Tensor y = lrnerv::separable_filter_valid(x.value(), window);
  return tape_of(x).record(std::move(y), {x}, [window](BackwardContext& ctx) {
    if (Tensor* gx = ctx.input_grad(0)) {
      separable_filter_valid_backward(ctx.grad_output(), window, *gx);
    }
  });
}

}  // namespace ad
}  // namespace lrnerv
