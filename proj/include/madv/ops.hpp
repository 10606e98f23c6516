#pragma once

#include <cstddef>

#include "madv/graph.hpp"
#include "madv/tensor.hpp"

/// Differentiable operations. Each takes the Graph to record on; nothing is
/// recorded when no operand is tracked, so the same code path serves both
/// training and inference.
namespace madv::ops {

Tensor add(Graph& g, const Tensor& a, const Tensor& b);
Tensor sub(Graph& g, const Tensor& a, const Tensor& b);
Tensor mul(Graph& g, const Tensor& a, const Tensor& b);
Tensor scale(Graph& g, const Tensor& a, double factor);
Tensor add_scalar(Graph& g, const Tensor& a, double offset);
Tensor sum(Graph& g, const Tensor& a);
Tensor mean(Graph& g, const Tensor& a);
/// sum(a * b) as a scalar.
Tensor dot(Graph& g, const Tensor& a, const Tensor& b);
/// Element `index` of a flat view, as a scalar.
Tensor select(Graph& g, const Tensor& a, std::size_t index);
Tensor log(Graph& g, const Tensor& a);
/// Gradient passes only where lo < a < hi.
Tensor clamp(Graph& g, const Tensor& a, double lo, double hi);
Tensor reshape(Graph& g, const Tensor& a, Shape shape);

enum class ActivationKind { relu, tanh, sigmoid, leaky_relu };
struct Activation {
  ActivationKind kind = ActivationKind::relu;
  double slope = 0.2;  // leaky_relu only
};
Tensor activate(Graph& g, const Tensor& a, Activation act);
Tensor relu(Graph& g, const Tensor& a);
Tensor tanh(Graph& g, const Tensor& a);
Tensor sigmoid(Graph& g, const Tensor& a);
Tensor leaky_relu(Graph& g, const Tensor& a, double slope);

/// Cross-correlation (no kernel flip) with zero padding.
/// input [cin,h,w], kernel [cout,cin,kh,kw] -> [cout,h',w'],
/// h' = (h + 2*padding - kh) / stride + 1.
Tensor conv2d(Graph& g, const Tensor& input, const Tensor& kernel, std::size_t stride, std::size_t padding);
/// input [cin,L], kernel [cout,cin,k] -> [cout,L'].
Tensor conv1d(Graph& g, const Tensor& input, const Tensor& kernel, std::size_t stride, std::size_t padding);
/// Adds bias[c] to every element of channel c; x is [c,...].
Tensor add_channel_bias(Graph& g, const Tensor& x, const Tensor& bias);
/// W·x + b with x [n], W [m,n], b [m].
Tensor dense(Graph& g, const Tensor& input, const Tensor& weights, const Tensor& bias);
/// Nearest-neighbour upsampling of every spatial axis of [c,h,w] or [c,L].
Tensor upsample_nearest(Graph& g, const Tensor& x, std::size_t factor);

/// -log softmax(logits)[label], stabilised by max subtraction.
Tensor softmax_cross_entropy(Graph& g, const Tensor& logits, std::size_t label);

}  // namespace madv::ops

namespace madv {
std::vector<double> softmax(std::span<const double> logits);
std::size_t argmax(std::span<const double> values);
}  // namespace madv
