#include <cmath>
#include <stdexcept>

#include "madv/nets.hpp"
#include "madv/ops.hpp"

namespace madv::nets {
namespace {

constexpr std::size_t kKernel = 9;
constexpr std::size_t kStride = 4;
constexpr std::size_t kPad = 4;

std::size_t conv_extent(std::size_t n) { return (n + 2 * kPad - kKernel) / kStride + 1; }

double he_std(std::size_t fan_in) { return std::sqrt(2.0 / static_cast<double>(fan_in)); }

void require_shape(const char* who, const Tensor& x, const Shape& expected) {
  if (x.shape() != expected) {
    throw std::invalid_argument(std::string(who) + ": input shape " + shape_str(x.shape()) + " does not match " +
                                shape_str(expected));
  }
}

Tensor conv1d_block(Graph& g, const Tensor& x, const Tensor& w, const Tensor& b, std::size_t stride,
                    std::size_t pad) {
  return ops::add_channel_bias(g, ops::conv1d(g, x, w, stride, pad), b);
}

}  // namespace

AudioClassifier::AudioClassifier(std::size_t length, std::size_t classes, std::uint64_t seed)
    : length_(length), classes_(classes) {
  if (length < kKernel || classes == 0) throw std::invalid_argument("AudioClassifier: invalid size");
  Rng rng(derive_seed(seed, 0xA0C1));
  flat_ = 16 * conv_extent(conv_extent(length));
  add_param("conv1.w", {8, 1, kKernel}, he_std(kKernel), rng);
  add_param("conv1.b", {8}, 0.0, rng);
  add_param("conv2.w", {16, 8, kKernel}, he_std(8 * kKernel), rng);
  add_param("conv2.b", {16}, 0.0, rng);
  add_param("fc1.w", {64, flat_}, he_std(flat_), rng);
  add_param("fc1.b", {64}, 0.0, rng);
  add_param("fc2.w", {classes, 64}, he_std(64) / 2.0, rng);
  add_param("fc2.b", {classes}, 0.0, rng);
}

Tensor AudioClassifier::forward(Graph& g, const Tensor& x) const {
  require_shape("AudioClassifier", x, input_shape());
  Tensor h = ops::relu(g, conv1d_block(g, x, param(0), param(1), kStride, kPad));
  h = ops::relu(g, conv1d_block(g, h, param(2), param(3), kStride, kPad));
  h = ops::relu(g, ops::dense(g, ops::reshape(g, h, {flat_}), param(4), param(5)));
  return ops::dense(g, h, param(6), param(7));
}

AudioGenerator::AudioGenerator(std::size_t length, std::uint64_t seed, std::size_t latent_dim)
    : length_(length), latent_dim_(latent_dim) {
  if (length == 0 || length % 4 != 0) throw std::invalid_argument("AudioGenerator: length must be a multiple of 4");
  if (latent_dim == 0) throw std::invalid_argument("AudioGenerator: latent dimension must be positive");
  Rng rng(derive_seed(seed, 0xA6E6));
  const std::size_t base = length / 4;
  add_param("proj.w", {16 * base, latent_dim}, he_std(latent_dim), rng);
  add_param("proj.b", {16 * base}, 0.0, rng);
  add_param("up1.w", {8, 16, 5}, he_std(16 * 5), rng);
  add_param("up1.b", {8}, 0.0, rng);
  add_param("up2.w", {8, 8, 5}, he_std(8 * 5), rng);
  add_param("up2.b", {8}, 0.0, rng);
  add_param("out.w", {1, 8, 5}, std::sqrt(1.0 / 40.0), rng);
  add_param("out.b", {1}, 0.0, rng);
}

Tensor AudioGenerator::forward(Graph& g, const Tensor& z) const {
  require_shape("AudioGenerator", z, input_shape());
  Tensor h = ops::relu(g, ops::dense(g, z, param(0), param(1)));
  h = ops::reshape(g, h, {16, length_ / 4});
  h = ops::relu(g, conv1d_block(g, ops::upsample_nearest(g, h, 2), param(2), param(3), 1, 2));
  h = ops::relu(g, conv1d_block(g, ops::upsample_nearest(g, h, 2), param(4), param(5), 1, 2));
  return ops::tanh(g, conv1d_block(g, h, param(6), param(7), 1, 2));
}

AudioDiscriminator::AudioDiscriminator(std::size_t length, std::uint64_t seed) : length_(length) {
  if (length < kKernel) throw std::invalid_argument("AudioDiscriminator: invalid length");
  Rng rng(derive_seed(seed, 0xAD15));
  flat_ = 16 * conv_extent(conv_extent(length));
  add_param("conv1.w", {8, 1, kKernel}, he_std(kKernel), rng);
  add_param("conv1.b", {8}, 0.0, rng);
  add_param("conv2.w", {16, 8, kKernel}, he_std(8 * kKernel), rng);
  add_param("conv2.b", {16}, 0.0, rng);
  add_param("fc.w", {1, flat_}, std::sqrt(1.0 / static_cast<double>(flat_)), rng);
  add_param("fc.b", {1}, 0.0, rng);
}

Tensor AudioDiscriminator::forward(Graph& g, const Tensor& x) const {
  require_shape("AudioDiscriminator", x, input_shape());
  Tensor h = ops::leaky_relu(g, conv1d_block(g, x, param(0), param(1), kStride, kPad), 0.2);
  h = ops::leaky_relu(g, conv1d_block(g, h, param(2), param(3), kStride, kPad), 0.2);
  h = ops::dense(g, ops::reshape(g, h, {flat_}), param(4), param(5));
  return ops::clamp(g, ops::sigmoid(g, h), kDiscriminatorClamp, 1.0 - kDiscriminatorClamp);
}

}  // namespace madv::nets
