#pragma once

#include <array>
#include <cstddef>
#include <cstdint>
#include <vector>

#include "madv/graph.hpp"
#include "madv/rng.hpp"
#include "madv/tensor.hpp"

namespace madv::overlay {

/// Patch placement: centre in pixel units and rotation in radians.
///
/// Pixel (row i, column j) covers [j, j+1) x [i, i+1), so its centre sits at
/// (j + 0.5, i + 0.5). A square patch of even side placed at an integer centre
/// with phi = 0 lines up exactly with the pixel grid.
struct PlacementParams {
  double cx = 0.0;
  double cy = 0.0;
  double phi = 0.0;
};

/// Uniform placement distribution. The centre box keeps the patch's
/// circumscribed disc inside the image; phi covers [phi_lo, phi_hi).
struct PlacementPrior {
  double cx_lo = 0.0, cx_hi = 0.0;
  double cy_lo = 0.0, cy_hi = 0.0;
  double phi_lo = -3.14159265358979323846;
  double phi_hi = 3.14159265358979323846;

  static PlacementPrior for_patch(std::size_t side, std::size_t height, std::size_t width);
  bool contains(const PlacementParams& theta) const;
};

PlacementParams sample_theta(const PlacementPrior& prior, Rng& rng);

/// One composite pixel and the bilinear taps it reads from the patch plane.
struct SampleTap {
  std::uint32_t pixel = 0;
  std::array<std::uint32_t, 4> source{};
  std::array<double, 4> weight{};
};

/// Inverse-mapped bilinear sampling plan for a side x side patch on an
/// height x width canvas. Only pixels whose centres fall inside the rotated
/// square appear; the rotated corners are transparent.
std::vector<SampleTap> sampling_plan(std::size_t side, std::size_t height, std::size_t width,
                                     const PlacementParams& theta);

/// 1 for canvas pixels covered by the rotated patch square.
std::vector<std::uint8_t> footprint_mask(std::size_t side, std::size_t height, std::size_t width,
                                         const PlacementParams& theta);

/// Composite of patch [c,s,s] over image [c,H,W]; written pixels are clamped
/// to [0,1], every other pixel is the original image value.
Tensor apply_patch(const Tensor& patch, const Tensor& image, const PlacementParams& theta);
/// Taped variant, differentiable w.r.t. the patch values (never theta).
Tensor apply_patch(Graph& g, const Tensor& patch, const Tensor& image, const PlacementParams& theta);
/// Transpose of the bilinear scatter: gradient [c,s,s] of a composite
/// upstream gradient [c,H,W]. Callers must pair it with the forward theta.
Tensor apply_patch_backward(const Tensor& upstream, const PlacementParams& theta, std::size_t side);

struct AudioPlacement {
  std::size_t offset = 0;
  double gain = 0.0;
};

/// host[i] + gain * snippet[i - offset] over the overlap, clamped to [-1,1];
/// the snippet is truncated at the end of the host.
Tensor apply_audio(const Tensor& snippet, const Tensor& host, const AudioPlacement& placement);
Tensor apply_audio(Graph& g, const Tensor& snippet, const Tensor& host, const AudioPlacement& placement);

}  // namespace madv::overlay
