#include "madv/overlay.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <stdexcept>
#include <string>

namespace madv::overlay {

PlacementPrior PlacementPrior::for_patch(std::size_t side, std::size_t height, std::size_t width) {
  const double radius = static_cast<double>(side) * std::numbers::sqrt2 / 2.0;
  const double w = static_cast<double>(width);
  const double h = static_cast<double>(height);
  PlacementPrior prior;
  prior.cx_lo = std::min(radius, w / 2.0);
  prior.cx_hi = std::max(w - radius, w / 2.0);
  prior.cy_lo = std::min(radius, h / 2.0);
  prior.cy_hi = std::max(h - radius, h / 2.0);
  return prior;
}

bool PlacementPrior::contains(const PlacementParams& t) const {
  return t.cx >= cx_lo && t.cx <= cx_hi && t.cy >= cy_lo && t.cy <= cy_hi && t.phi >= phi_lo && t.phi < phi_hi;
}

PlacementParams sample_theta(const PlacementPrior& prior, Rng& rng) {
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  PlacementParams t;
  t.cx = prior.cx_lo + (prior.cx_hi - prior.cx_lo) * unit(rng);
  t.cy = prior.cy_lo + (prior.cy_hi - prior.cy_lo) * unit(rng);
  t.phi = prior.phi_lo + (prior.phi_hi - prior.phi_lo) * unit(rng);
  if (t.phi >= prior.phi_hi) t.phi = prior.phi_lo;
  return t;
}

namespace {

template <class Visit>
void for_each_covered(std::size_t side, std::size_t height, std::size_t width, const PlacementParams& theta,
                      Visit visit) {
  if (!std::isfinite(theta.cx) || !std::isfinite(theta.cy) || !std::isfinite(theta.phi)) {
    throw std::invalid_argument("placement parameters must be finite");
  }
  const double half = static_cast<double>(side) / 2.0;
  const double c = std::cos(theta.phi);
  const double s = std::sin(theta.phi);
  const double reach = half * std::numbers::sqrt2 + 1.0;
  const double h = static_cast<double>(height);
  const double w = static_cast<double>(width);
  const auto row0 = static_cast<long>(std::max(0.0, std::floor(theta.cy - reach)));
  const auto row1 = static_cast<long>(std::min(h, std::ceil(theta.cy + reach)));
  const auto col0 = static_cast<long>(std::max(0.0, std::floor(theta.cx - reach)));
  const auto col1 = static_cast<long>(std::min(w, std::ceil(theta.cx + reach)));
  for (long i = row0; i < row1; ++i) {
    const double dy = static_cast<double>(i) + 0.5 - theta.cy;
    for (long j = col0; j < col1; ++j) {
      const double dx = static_cast<double>(j) + 0.5 - theta.cx;
      // Inverse rotation R(-phi) takes canvas offsets into patch-local axes.
      const double lx = c * dx + s * dy;
      const double ly = -s * dx + c * dy;
      if (lx < -half || lx >= half || ly < -half || ly >= half) continue;
      visit(static_cast<std::size_t>(i) * width + static_cast<std::size_t>(j), lx + half - 0.5, ly + half - 0.5);
    }
  }
}

void check_patch_fits(const Tensor& patch, const Tensor& image) {
  if (patch.rank() != 3 || image.rank() != 3 || patch.dim(1) != patch.dim(2)) {
    throw std::invalid_argument("apply_patch expects a square patch [c,s,s] and image [c,H,W], got " +
                                shape_str(patch.shape()) + " and " + shape_str(image.shape()));
  }
  if (patch.dim(0) != image.dim(0)) {
    throw std::invalid_argument("apply_patch: channel mismatch between patch " + shape_str(patch.shape()) +
                                " and image " + shape_str(image.shape()));
  }
  if (patch.dim(1) > std::min(image.dim(1), image.dim(2))) {
    throw std::invalid_argument("apply_patch: patch " + shape_str(patch.shape()) + " is larger than image " +
                                shape_str(image.shape()));
  }
}

}  // namespace

std::vector<SampleTap> sampling_plan(std::size_t side, std::size_t height, std::size_t width,
                                     const PlacementParams& theta) {
  std::vector<SampleTap> plan;
  const long last = static_cast<long>(side) - 1;
  for_each_covered(side, height, width, theta, [&](std::size_t pixel, double u, double v) {
    const double fu = std::floor(u);
    const double fv = std::floor(v);
    const double ax = u - fu;
    const double ay = v - fv;
    const long x0 = static_cast<long>(fu);
    const long y0 = static_cast<long>(fv);
    // Taps that fall in the half-pixel rim replicate the edge texel.
    const auto cx0 = static_cast<std::uint32_t>(std::clamp(x0, 0L, last));
    const auto cx1 = static_cast<std::uint32_t>(std::clamp(x0 + 1, 0L, last));
    const auto cy0 = static_cast<std::uint32_t>(std::clamp(y0, 0L, last));
    const auto cy1 = static_cast<std::uint32_t>(std::clamp(y0 + 1, 0L, last));
    const auto s = static_cast<std::uint32_t>(side);
    SampleTap tap;
    tap.pixel = static_cast<std::uint32_t>(pixel);
    tap.source = {cy0 * s + cx0, cy0 * s + cx1, cy1 * s + cx0, cy1 * s + cx1};
    tap.weight = {(1.0 - ax) * (1.0 - ay), ax * (1.0 - ay), (1.0 - ax) * ay, ax * ay};
    plan.push_back(tap);
  });
  return plan;
}

std::vector<std::uint8_t> footprint_mask(std::size_t side, std::size_t height, std::size_t width,
                                         const PlacementParams& theta) {
  std::vector<std::uint8_t> mask(height * width, 0);
  for_each_covered(side, height, width, theta, [&](std::size_t pixel, double, double) { mask[pixel] = 1; });
  return mask;
}

Tensor apply_patch(const Tensor& patch, const Tensor& image, const PlacementParams& theta) {
  check_patch_fits(patch, image);
  const std::size_t channels = image.dim(0);
  const std::size_t plane = image.dim(1) * image.dim(2);
  const std::size_t side = patch.dim(1);
  const std::size_t patch_plane = side * side;
  Tensor out = image.detach();
  for (const auto& tap : sampling_plan(side, image.dim(1), image.dim(2), theta)) {
    for (std::size_t c = 0; c < channels; ++c) {
      const double* src = patch.data().data() + c * patch_plane;
      double v = 0.0;
      for (int k = 0; k < 4; ++k) v += tap.weight[k] * src[tap.source[k]];
      out[c * plane + tap.pixel] = std::clamp(v, 0.0, 1.0);
    }
  }
  return out;
}

Tensor apply_patch_backward(const Tensor& upstream, const PlacementParams& theta, std::size_t side) {
  if (upstream.rank() != 3) throw std::invalid_argument("apply_patch_backward expects [c,H,W] upstream gradient");
  const std::size_t channels = upstream.dim(0);
  const std::size_t plane = upstream.dim(1) * upstream.dim(2);
  const std::size_t patch_plane = side * side;
  Tensor grad(Shape{channels, side, side});
  for (const auto& tap : sampling_plan(side, upstream.dim(1), upstream.dim(2), theta)) {
    for (std::size_t c = 0; c < channels; ++c) {
      const double up = upstream[c * plane + tap.pixel];
      double* dst = grad.data().data() + c * patch_plane;
      for (int k = 0; k < 4; ++k) dst[tap.source[k]] += tap.weight[k] * up;
    }
  }
  return grad;
}

Tensor apply_patch(Graph& g, const Tensor& patch, const Tensor& image, const PlacementParams& theta) {
  check_patch_fits(patch, image);
  const std::size_t channels = image.dim(0);
  const std::size_t plane = image.dim(1) * image.dim(2);
  const std::size_t side = patch.dim(1);
  const std::size_t patch_plane = side * side;
  auto plan = sampling_plan(side, image.dim(1), image.dim(2), theta);
  Tensor out = image.detach();
  std::vector<std::uint8_t> saturated(channels * plan.size(), 0);
  for (std::size_t t = 0; t < plan.size(); ++t) {
    const auto& tap = plan[t];
    for (std::size_t c = 0; c < channels; ++c) {
      const double* src = patch.data().data() + c * patch_plane;
      double v = 0.0;
      for (int k = 0; k < 4; ++k) v += tap.weight[k] * src[tap.source[k]];
      saturated[c * plan.size() + t] = (v < 0.0 || v > 1.0);
      out[c * plane + tap.pixel] = std::clamp(v, 0.0, 1.0);
    }
  }
  if (g.recording() && patch.tracked()) {
    g.record("apply_patch", {patch}, out,
             [patch, plan = std::move(plan), saturated = std::move(saturated), channels, plane,
              patch_plane](std::span<const double> gy) mutable {
               auto gp = patch.grad_mut();
               for (std::size_t t = 0; t < plan.size(); ++t) {
                 const auto& tap = plan[t];
                 for (std::size_t c = 0; c < channels; ++c) {
                   if (saturated[c * plan.size() + t]) continue;
                   const double up = gy[c * plane + tap.pixel];
                   double* dst = gp.data() + c * patch_plane;
                   for (int k = 0; k < 4; ++k) dst[tap.source[k]] += tap.weight[k] * up;
                 }
               }
             });
  }
  return out;
}

namespace {

void check_audio(const Tensor& snippet, const Tensor& host, const AudioPlacement& placement) {
  if (snippet.rank() != 2 || host.rank() != 2 || snippet.dim(0) != 1 || host.dim(0) != 1) {
    throw std::invalid_argument("apply_audio expects [1,L] snippet and [1,N] host, got " +
                                shape_str(snippet.shape()) + " and " + shape_str(host.shape()));
  }
  if (snippet.dim(1) > host.dim(1)) {
    throw std::invalid_argument("apply_audio: snippet longer than host");
  }
  if (placement.offset >= host.dim(1)) {
    throw std::out_of_range("apply_audio: offset " + std::to_string(placement.offset) + " outside host of length " +
                            std::to_string(host.dim(1)));
  }
  if (!(placement.gain >= 0.0) || !std::isfinite(placement.gain)) {
    throw std::invalid_argument("apply_audio: gain must be finite and non-negative");
  }
}

}  // namespace

Tensor apply_audio(const Tensor& snippet, const Tensor& host, const AudioPlacement& placement) {
  Graph scratch;
  return apply_audio(scratch, snippet.detach(), host, placement);
}

Tensor apply_audio(Graph& g, const Tensor& snippet, const Tensor& host, const AudioPlacement& placement) {
  check_audio(snippet, host, placement);
  Tensor out = host.detach();
  if (placement.gain == 0.0) return out;
  const std::size_t begin = placement.offset;
  const std::size_t end = std::min(host.dim(1), begin + snippet.dim(1));
  for (std::size_t i = begin; i < end; ++i) {
    out[i] = std::clamp(host[i] + placement.gain * snippet[i - begin], -1.0, 1.0);
  }
  if (g.recording() && snippet.tracked()) {
    g.record("apply_audio", {snippet}, out,
             [snippet, host, begin, end, gain = placement.gain](std::span<const double> gy) mutable {
               auto gs = snippet.grad_mut();
               for (std::size_t i = begin; i < end; ++i) {
                 const double v = host[i] + gain * snippet[i - begin];
                 if (v > -1.0 && v < 1.0) gs[i - begin] += gain * gy[i];
               }
             });
  }
  return out;
}

}  // namespace madv::overlay
