#include "madv/ops.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>
#include <string>

namespace madv {

std::vector<double> softmax(std::span<const double> logits) {
  std::vector<double> out(logits.begin(), logits.end());
  const double top = *std::max_element(out.begin(), out.end());
  double total = 0.0;
  for (auto& v : out) {
    v = std::exp(v - top);
    total += v;
  }
  for (auto& v : out) v /= total;
  return out;
}

std::size_t argmax(std::span<const double> values) {
  return static_cast<std::size_t>(std::max_element(values.begin(), values.end()) - values.begin());
}

}  // namespace madv

namespace madv::ops {
namespace {

bool any_tracked(const Graph& g, const Tensor& a) { return g.recording() && a.tracked(); }
bool any_tracked(const Graph& g, const Tensor& a, const Tensor& b) {
  return g.recording() && (a.tracked() || b.tracked());
}
bool any_tracked(const Graph& g, const Tensor& a, const Tensor& b, const Tensor& c) {
  return g.recording() && (a.tracked() || b.tracked() || c.tracked());
}

void require_same_shape(const char* op, const Tensor& a, const Tensor& b) {
  if (a.shape() != b.shape()) {
    throw std::invalid_argument(std::string(op) + ": shape mismatch " + shape_str(a.shape()) + " vs " +
                                shape_str(b.shape()));
  }
}

// Elementwise unary op whose derivative is expressed through input x and output y.
template <class Fwd, class Deriv>
Tensor unary(Graph& g, const char* name, const Tensor& a, Fwd fwd, Deriv deriv) {
  Tensor out(a.shape());
  auto x = a.data();
  auto y = out.data();
  for (std::size_t i = 0; i < x.size(); ++i) y[i] = fwd(x[i]);
  if (any_tracked(g, a)) {
    g.record(name, {a}, out, [a, out, deriv](std::span<const double> gy) mutable {
      auto ga = a.grad_mut();
      auto xv = a.data();
      auto yv = out.data();
      for (std::size_t i = 0; i < ga.size(); ++i) ga[i] += gy[i] * deriv(xv[i], yv[i]);
    });
  }
  return out;
}

struct ConvGeometry {
  std::size_t cin, h, w, cout, kh, kw, sh, sw, ph, pw, oh, ow;
};

// Output index range [lo, hi) for which in = o*stride + k - pad lands in [0, extent).
std::pair<std::size_t, std::size_t> valid_range(std::size_t out_extent, std::size_t extent, std::size_t stride,
                                                std::size_t k, std::size_t pad) {
  const long s = static_cast<long>(stride);
  const long offset = static_cast<long>(k) - static_cast<long>(pad);
  long lo = 0;
  if (offset < 0) lo = (-offset + s - 1) / s;
  long hi = (static_cast<long>(extent) - 1 - offset);
  hi = hi < 0 ? 0 : hi / s + 1;
  hi = std::min(hi, static_cast<long>(out_extent));
  if (lo > hi) lo = hi;
  return {static_cast<std::size_t>(lo), static_cast<std::size_t>(hi)};
}

enum class ConvPass { forward, input_grad, kernel_grad };

// One loop nest serves all three passes so their index maps cannot drift apart.
template <ConvPass pass>
void conv_kernel(const ConvGeometry& c, const double* in, const double* k, double* out, double* din, double* dk,
                 const double* dout) {
  for (std::size_t co = 0; co < c.cout; ++co) {
    for (std::size_t ci = 0; ci < c.cin; ++ci) {
      for (std::size_t ky = 0; ky < c.kh; ++ky) {
        const auto [oy0, oy1] = valid_range(c.oh, c.h, c.sh, ky, c.ph);
        for (std::size_t kx = 0; kx < c.kw; ++kx) {
          const auto [ox0, ox1] = valid_range(c.ow, c.w, c.sw, kx, c.pw);
          const std::size_t kidx = ((co * c.cin + ci) * c.kh + ky) * c.kw + kx;
          const double wv = k[kidx];
          double acc = 0.0;
          for (std::size_t oy = oy0; oy < oy1; ++oy) {
            const std::size_t iy = oy * c.sh + ky - c.ph;
            const std::size_t irow = (ci * c.h + iy) * c.w + kx - c.pw;
            const std::size_t orow = (co * c.oh + oy) * c.ow;
            if constexpr (pass == ConvPass::forward) {
              for (std::size_t ox = ox0; ox < ox1; ++ox) out[orow + ox] += wv * in[irow + ox * c.sw];
            } else if constexpr (pass == ConvPass::input_grad) {
              for (std::size_t ox = ox0; ox < ox1; ++ox) din[irow + ox * c.sw] += wv * dout[orow + ox];
            } else {
              for (std::size_t ox = ox0; ox < ox1; ++ox) acc += dout[orow + ox] * in[irow + ox * c.sw];
            }
          }
          if constexpr (pass == ConvPass::kernel_grad) dk[kidx] += acc;
        }
      }
    }
  }
}

Tensor conv_general(Graph& g, const char* name, const Tensor& input, const Tensor& kernel, const ConvGeometry& geo,
                    Shape out_shape) {
  Tensor out(std::move(out_shape));
  conv_kernel<ConvPass::forward>(geo, input.data().data(), kernel.data().data(), out.data().data(), nullptr,
                                 nullptr, nullptr);
  if (any_tracked(g, input, kernel)) {
    g.record(name, {input, kernel}, out, [input, kernel, geo](std::span<const double> gy) mutable {
      if (input.tracked()) {
        conv_kernel<ConvPass::input_grad>(geo, nullptr, kernel.data().data(), nullptr, input.grad_mut().data(),
                                          nullptr, gy.data());
      }
      if (kernel.tracked()) {
        conv_kernel<ConvPass::kernel_grad>(geo, input.data().data(), nullptr, nullptr, nullptr,
                                           kernel.grad_mut().data(), gy.data());
      }
    });
  }
  return out;
}

std::size_t conv_out_extent(const char* op, std::size_t extent, std::size_t k, std::size_t stride,
                            std::size_t padding) {
  if (stride == 0) throw std::invalid_argument(std::string(op) + ": stride must be positive");
  if (k > extent + 2 * padding) {
    throw std::invalid_argument(std::string(op) + ": kernel extent " + std::to_string(k) +
                                " exceeds padded input extent " + std::to_string(extent + 2 * padding));
  }
  return (extent + 2 * padding - k) / stride + 1;
}

}  // namespace

Tensor add(Graph& g, const Tensor& a, const Tensor& b) {
  require_same_shape("add", a, b);
  Tensor out(a.shape());
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = a[i] + b[i];
  if (any_tracked(g, a, b)) {
    g.record("add", {a, b}, out, [a, b](std::span<const double> gy) mutable {
      if (a.tracked()) {
        auto ga = a.grad_mut();
        for (std::size_t i = 0; i < ga.size(); ++i) ga[i] += gy[i];
      }
      if (b.tracked()) {
        auto gb = b.grad_mut();
        for (std::size_t i = 0; i < gb.size(); ++i) gb[i] += gy[i];
      }
    });
  }
  return out;
}

Tensor sub(Graph& g, const Tensor& a, const Tensor& b) {
  require_same_shape("sub", a, b);
  Tensor out(a.shape());
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = a[i] - b[i];
  if (any_tracked(g, a, b)) {
    g.record("sub", {a, b}, out, [a, b](std::span<const double> gy) mutable {
      if (a.tracked()) {
        auto ga = a.grad_mut();
        for (std::size_t i = 0; i < ga.size(); ++i) ga[i] += gy[i];
      }
      if (b.tracked()) {
        auto gb = b.grad_mut();
        for (std::size_t i = 0; i < gb.size(); ++i) gb[i] -= gy[i];
      }
    });
  }
  return out;
}

Tensor mul(Graph& g, const Tensor& a, const Tensor& b) {
  require_same_shape("mul", a, b);
  Tensor out(a.shape());
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = a[i] * b[i];
  if (any_tracked(g, a, b)) {
    g.record("mul", {a, b}, out, [a, b](std::span<const double> gy) mutable {
      if (a.tracked()) {
        auto ga = a.grad_mut();
        for (std::size_t i = 0; i < ga.size(); ++i) ga[i] += gy[i] * b[i];
      }
      if (b.tracked()) {
        auto gb = b.grad_mut();
        for (std::size_t i = 0; i < gb.size(); ++i) gb[i] += gy[i] * a[i];
      }
    });
  }
  return out;
}

Tensor scale(Graph& g, const Tensor& a, double factor) {
  return unary(
      g, "scale", a, [factor](double x) { return factor * x; }, [factor](double, double) { return factor; });
}

Tensor add_scalar(Graph& g, const Tensor& a, double offset) {
  return unary(
      g, "add_scalar", a, [offset](double x) { return x + offset; }, [](double, double) { return 1.0; });
}

Tensor sum(Graph& g, const Tensor& a) {
  double total = 0.0;
  for (double v : a.data()) total += v;
  Tensor out = Tensor::scalar(total);
  if (any_tracked(g, a)) {
    g.record("sum", {a}, out, [a](std::span<const double> gy) mutable {
      for (auto& v : a.grad_mut()) v += gy[0];
    });
  }
  return out;
}

Tensor mean(Graph& g, const Tensor& a) { return scale(g, sum(g, a), 1.0 / static_cast<double>(a.size())); }

Tensor dot(Graph& g, const Tensor& a, const Tensor& b) {
  require_same_shape("dot", a, b);
  double total = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) total += a[i] * b[i];
  Tensor out = Tensor::scalar(total);
  if (any_tracked(g, a, b)) {
    g.record("dot", {a, b}, out, [a, b](std::span<const double> gy) mutable {
      if (a.tracked()) {
        auto ga = a.grad_mut();
        for (std::size_t i = 0; i < ga.size(); ++i) ga[i] += gy[0] * b[i];
      }
      if (b.tracked()) {
        auto gb = b.grad_mut();
        for (std::size_t i = 0; i < gb.size(); ++i) gb[i] += gy[0] * a[i];
      }
    });
  }
  return out;
}

Tensor select(Graph& g, const Tensor& a, std::size_t index) {
  if (index >= a.size()) {
    throw std::out_of_range("select: index " + std::to_string(index) + " out of range for " + shape_str(a.shape()));
  }
  Tensor out = Tensor::scalar(a[index]);
  if (any_tracked(g, a)) {
    g.record("select", {a}, out, [a, index](std::span<const double> gy) mutable { a.grad_mut()[index] += gy[0]; });
  }
  return out;
}

Tensor log(Graph& g, const Tensor& a) {
  for (double v : a.data()) {
    if (!(v > 0.0)) throw std::domain_error("log: non-positive operand " + std::to_string(v));
  }
  return unary(
      g, "log", a, [](double x) { return std::log(x); }, [](double x, double) { return 1.0 / x; });
}

Tensor clamp(Graph& g, const Tensor& a, double lo, double hi) {
  return unary(
      g, "clamp", a, [lo, hi](double x) { return std::clamp(x, lo, hi); },
      [lo, hi](double x, double) { return (x > lo && x < hi) ? 1.0 : 0.0; });
}

Tensor reshape(Graph& g, const Tensor& a, Shape shape) {
  Tensor out = a.reshaped(std::move(shape));
  if (any_tracked(g, a)) {
    g.record("reshape", {a}, out, [a](std::span<const double> gy) mutable {
      auto ga = a.grad_mut();
      for (std::size_t i = 0; i < ga.size(); ++i) ga[i] += gy[i];
    });
  }
  return out;
}

Tensor relu(Graph& g, const Tensor& a) {
  return unary(
      g, "relu", a, [](double x) { return x > 0.0 ? x : 0.0; }, [](double x, double) { return x > 0.0 ? 1.0 : 0.0; });
}

Tensor tanh(Graph& g, const Tensor& a) {
  return unary(
      g, "tanh", a, [](double x) { return std::tanh(x); }, [](double, double y) { return 1.0 - y * y; });
}

Tensor sigmoid(Graph& g, const Tensor& a) {
  return unary(
      g, "sigmoid", a,
      [](double x) {
        if (x >= 0.0) return 1.0 / (1.0 + std::exp(-x));
        const double e = std::exp(x);
        return e / (1.0 + e);
      },
      [](double, double y) { return y * (1.0 - y); });
}

Tensor leaky_relu(Graph& g, const Tensor& a, double slope) {
  return unary(
      g, "leaky_relu", a, [slope](double x) { return x > 0.0 ? x : slope * x; },
      [slope](double x, double) { return x > 0.0 ? 1.0 : slope; });
}

Tensor activate(Graph& g, const Tensor& a, Activation act) {
  switch (act.kind) {
    case ActivationKind::relu:
      return relu(g, a);
    case ActivationKind::tanh:
      return tanh(g, a);
    case ActivationKind::sigmoid:
      return sigmoid(g, a);
    case ActivationKind::leaky_relu:
      return leaky_relu(g, a, act.slope);
  }
  throw std::invalid_argument("unknown activation");
}

Tensor conv2d(Graph& g, const Tensor& input, const Tensor& kernel, std::size_t stride, std::size_t padding) {
  if (input.rank() != 3 || kernel.rank() != 4) {
    throw std::invalid_argument("conv2d expects input [cin,h,w] and kernel [cout,cin,kh,kw], got " +
                                shape_str(input.shape()) + " and " + shape_str(kernel.shape()));
  }
  if (input.dim(0) != kernel.dim(1)) {
    throw std::invalid_argument("conv2d: input channels of " + shape_str(input.shape()) +
                                " do not match kernel " + shape_str(kernel.shape()));
  }
  ConvGeometry geo{};
  geo.cin = input.dim(0);
  geo.h = input.dim(1);
  geo.w = input.dim(2);
  geo.cout = kernel.dim(0);
  geo.kh = kernel.dim(2);
  geo.kw = kernel.dim(3);
  geo.sh = geo.sw = stride;
  geo.ph = geo.pw = padding;
  geo.oh = conv_out_extent("conv2d", geo.h, geo.kh, stride, padding);
  geo.ow = conv_out_extent("conv2d", geo.w, geo.kw, stride, padding);
  return conv_general(g, "conv2d", input, kernel, geo, {geo.cout, geo.oh, geo.ow});
}

Tensor conv1d(Graph& g, const Tensor& input, const Tensor& kernel, std::size_t stride, std::size_t padding) {
  if (input.rank() != 2 || kernel.rank() != 3) {
    throw std::invalid_argument("conv1d expects input [cin,L] and kernel [cout,cin,k], got " +
                                shape_str(input.shape()) + " and " + shape_str(kernel.shape()));
  }
  if (input.dim(0) != kernel.dim(1)) {
    throw std::invalid_argument("conv1d: input channels of " + shape_str(input.shape()) +
                                " do not match kernel " + shape_str(kernel.shape()));
  }
  ConvGeometry geo{};
  geo.cin = input.dim(0);
  geo.h = 1;
  geo.w = input.dim(1);
  geo.cout = kernel.dim(0);
  geo.kh = 1;
  geo.kw = kernel.dim(2);
  geo.sh = 1;
  geo.sw = stride;
  geo.ph = 0;
  geo.pw = padding;
  geo.oh = 1;
  geo.ow = conv_out_extent("conv1d", geo.w, geo.kw, stride, padding);
  return conv_general(g, "conv1d", input, kernel, geo, {geo.cout, geo.ow});
}

Tensor add_channel_bias(Graph& g, const Tensor& x, const Tensor& bias) {
  if (x.rank() < 2 || bias.rank() != 1 || bias.dim(0) != x.dim(0)) {
    throw std::invalid_argument("add_channel_bias: bias " + shape_str(bias.shape()) + " does not match " +
                                shape_str(x.shape()));
  }
  const std::size_t channels = x.dim(0);
  const std::size_t plane = x.size() / channels;
  Tensor out(x.shape());
  for (std::size_t c = 0; c < channels; ++c) {
    for (std::size_t i = 0; i < plane; ++i) out[c * plane + i] = x[c * plane + i] + bias[c];
  }
  if (any_tracked(g, x, bias)) {
    g.record("add_channel_bias", {x, bias}, out, [x, bias, channels, plane](std::span<const double> gy) mutable {
      if (x.tracked()) {
        auto gx = x.grad_mut();
        for (std::size_t i = 0; i < gx.size(); ++i) gx[i] += gy[i];
      }
      if (bias.tracked()) {
        auto gb = bias.grad_mut();
        for (std::size_t c = 0; c < channels; ++c) {
          double acc = 0.0;
          for (std::size_t i = 0; i < plane; ++i) acc += gy[c * plane + i];
          gb[c] += acc;
        }
      }
    });
  }
  return out;
}

Tensor dense(Graph& g, const Tensor& input, const Tensor& weights, const Tensor& bias) {
  if (input.rank() != 1 || weights.rank() != 2 || bias.rank() != 1 || weights.dim(1) != input.dim(0) ||
      weights.dim(0) != bias.dim(0)) {
    throw std::invalid_argument("dense: incompatible shapes input " + shape_str(input.shape()) + ", weights " +
                                shape_str(weights.shape()) + ", bias " + shape_str(bias.shape()));
  }
  const std::size_t m = weights.dim(0);
  const std::size_t n = weights.dim(1);
  Tensor out(Shape{m});
  const double* w = weights.data().data();
  const double* x = input.data().data();
  for (std::size_t i = 0; i < m; ++i) {
    double acc = bias[i];
    const double* row = w + i * n;
    for (std::size_t j = 0; j < n; ++j) acc += row[j] * x[j];
    out[i] = acc;
  }
  if (any_tracked(g, input, weights, bias)) {
    g.record("dense", {input, weights, bias}, out, [input, weights, bias, m, n](std::span<const double> gy) mutable {
      if (input.tracked()) {
        auto gx = input.grad_mut();
        const double* w = weights.data().data();
        for (std::size_t i = 0; i < m; ++i) {
          const double gi = gy[i];
          if (gi == 0.0) continue;
          const double* row = w + i * n;
          for (std::size_t j = 0; j < n; ++j) gx[j] += gi * row[j];
        }
      }
      if (weights.tracked()) {
        auto gw = weights.grad_mut();
        const double* x = input.data().data();
        for (std::size_t i = 0; i < m; ++i) {
          const double gi = gy[i];
          if (gi == 0.0) continue;
          double* row = gw.data() + i * n;
          for (std::size_t j = 0; j < n; ++j) row[j] += gi * x[j];
        }
      }
      if (bias.tracked()) {
        auto gb = bias.grad_mut();
        for (std::size_t i = 0; i < m; ++i) gb[i] += gy[i];
      }
    });
  }
  return out;
}

Tensor upsample_nearest(Graph& g, const Tensor& x, std::size_t factor) {
  if (factor == 0) throw std::invalid_argument("upsample_nearest: factor must be positive");
  if (x.rank() != 2 && x.rank() != 3) {
    throw std::invalid_argument("upsample_nearest expects [c,L] or [c,h,w], got " + shape_str(x.shape()));
  }
  const bool planar = x.rank() == 3;
  const std::size_t c = x.dim(0);
  const std::size_t h = planar ? x.dim(1) : 1;
  const std::size_t w = planar ? x.dim(2) : x.dim(1);
  const std::size_t oh = planar ? h * factor : 1;
  const std::size_t ow = w * factor;
  Tensor out(planar ? Shape{c, oh, ow} : Shape{c, ow});
  auto src_index = [=](std::size_t ch, std::size_t oy, std::size_t ox) {
    const std::size_t iy = planar ? oy / factor : 0;
    return (ch * h + iy) * w + ox / factor;
  };
  for (std::size_t ch = 0; ch < c; ++ch) {
    for (std::size_t oy = 0; oy < oh; ++oy) {
      for (std::size_t ox = 0; ox < ow; ++ox) out[(ch * oh + oy) * ow + ox] = x[src_index(ch, oy, ox)];
    }
  }
  if (any_tracked(g, x)) {
    g.record("upsample_nearest", {x}, out, [x, c, oh, ow, src_index](std::span<const double> gy) mutable {
      auto gx = x.grad_mut();
      for (std::size_t ch = 0; ch < c; ++ch) {
        for (std::size_t oy = 0; oy < oh; ++oy) {
          for (std::size_t ox = 0; ox < ow; ++ox) gx[src_index(ch, oy, ox)] += gy[(ch * oh + oy) * ow + ox];
        }
      }
    });
  }
  return out;
}

Tensor softmax_cross_entropy(Graph& g, const Tensor& logits, std::size_t label) {
  if (logits.rank() != 1) throw std::invalid_argument("softmax_cross_entropy expects [K] logits");
  if (label >= logits.size()) {
    throw std::out_of_range("softmax_cross_entropy: label " + std::to_string(label) + " out of range for " +
                            std::to_string(logits.size()) + " classes");
  }
  auto z = logits.data();
  const double top = *std::max_element(z.begin(), z.end());
  double total = 0.0;
  for (double v : z) total += std::exp(v - top);
  const double log_norm = top + std::log(total);
  Tensor out = Tensor::scalar(log_norm - z[label]);
  if (any_tracked(g, logits)) {
    g.record("softmax_cross_entropy", {logits}, out, [logits, label](std::span<const double> gy) mutable {
      const auto p = softmax(logits.data());
      auto gz = logits.grad_mut();
      for (std::size_t k = 0; k < gz.size(); ++k) gz[k] += gy[0] * (p[k] - (k == label ? 1.0 : 0.0));
    });
  }
  return out;
}

}  // namespace madv::ops
