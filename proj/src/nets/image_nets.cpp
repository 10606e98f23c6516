#include <cmath>
#include <stdexcept>

#include "madv/nets.hpp"
#include "madv/ops.hpp"

namespace madv::nets {
namespace {

std::size_t conv_extent(std::size_t n, std::size_t k, std::size_t stride, std::size_t pad) {
  return (n + 2 * pad - k) / stride + 1;
}

double he_std(std::size_t fan_in) { return std::sqrt(2.0 / static_cast<double>(fan_in)); }

void require_shape(const char* who, const Tensor& x, const Shape& expected) {
  if (x.shape() != expected) {
    throw std::invalid_argument(std::string(who) + ": input shape " + shape_str(x.shape()) + " does not match " +
                                shape_str(expected));
  }
}

Tensor conv_block(Graph& g, const Tensor& x, const Tensor& w, const Tensor& b, std::size_t stride) {
  return ops::add_channel_bias(g, ops::conv2d(g, x, w, stride, 1), b);
}

}  // namespace

Classifier::Classifier(ClassifierSpec spec, std::uint64_t seed) : spec_(spec) {
  if (spec.classes == 0 || spec.channels == 0 || spec.height < 3 || spec.width < 3) {
    throw std::invalid_argument("Classifier: invalid spec");
  }
  Rng rng(derive_seed(seed, 0xC1A5));
  const std::size_t h = conv_extent(conv_extent(spec.height, 3, 2, 1), 3, 2, 1);
  const std::size_t w = conv_extent(conv_extent(spec.width, 3, 2, 1), 3, 2, 1);
  flat_ = 16 * h * w;
  add_param("conv1.w", {8, spec.channels, 3, 3}, he_std(spec.channels * 9), rng);
  add_param("conv1.b", {8}, 0.0, rng);
  add_param("conv2.w", {16, 8, 3, 3}, he_std(8 * 9), rng);
  add_param("conv2.b", {16}, 0.0, rng);
  add_param("fc1.w", {64, flat_}, he_std(flat_), rng);
  add_param("fc1.b", {64}, 0.0, rng);
  add_param("fc2.w", {spec.classes, 64}, he_std(64) / 2.0, rng);
  add_param("fc2.b", {spec.classes}, 0.0, rng);
}

Tensor Classifier::features(Graph& g, const Tensor& x) const {
  require_shape("Classifier", x, input_shape());
  Tensor h = ops::relu(g, conv_block(g, x, param(0), param(1), 2));
  return ops::relu(g, conv_block(g, h, param(2), param(3), 2));
}

Tensor Classifier::head(Graph& g, const Tensor& features) const {
  Tensor flat = ops::reshape(g, features, {flat_});
  Tensor h = ops::relu(g, ops::dense(g, flat, param(4), param(5)));
  return ops::dense(g, h, param(6), param(7));
}

Tensor Classifier::forward(Graph& g, const Tensor& x) const { return head(g, features(g, x)); }

Generator::Generator(std::size_t side, std::uint64_t seed, std::size_t latent_dim)
    : side_(side), latent_dim_(latent_dim), base_(side / 4) {
  if (side == 0 || side % 4 != 0) throw std::invalid_argument("Generator: side must be a positive multiple of 4");
  if (latent_dim == 0) throw std::invalid_argument("Generator: latent dimension must be positive");
  Rng rng(derive_seed(seed, 0x6E6));
  add_param("proj.w", {32 * base_ * base_, latent_dim}, he_std(latent_dim), rng);
  add_param("proj.b", {32 * base_ * base_}, 0.0, rng);
  add_param("up1.w", {16, 32, 3, 3}, he_std(32 * 9), rng);
  add_param("up1.b", {16}, 0.0, rng);
  add_param("up2.w", {8, 16, 3, 3}, he_std(16 * 9), rng);
  add_param("up2.b", {8}, 0.0, rng);
  add_param("out.w", {3, 8, 3, 3}, std::sqrt(1.0 / (8 * 9)), rng);
  add_param("out.b", {3}, 0.0, rng);
}

Tensor Generator::forward(Graph& g, const Tensor& z) const {
  require_shape("Generator", z, input_shape());
  Tensor h = ops::relu(g, ops::dense(g, z, param(0), param(1)));
  h = ops::reshape(g, h, {32, base_, base_});
  h = ops::relu(g, conv_block(g, ops::upsample_nearest(g, h, 2), param(2), param(3), 1));
  h = ops::relu(g, conv_block(g, ops::upsample_nearest(g, h, 2), param(4), param(5), 1));
  h = ops::tanh(g, conv_block(g, h, param(6), param(7), 1));
  return ops::add_scalar(g, ops::scale(g, h, 0.5), 0.5);
}

Discriminator::Discriminator(std::size_t side, std::uint64_t seed, std::size_t channels)
    : side_(side), channels_(channels) {
  if (side < 3 || channels == 0) throw std::invalid_argument("Discriminator: invalid input size");
  Rng rng(derive_seed(seed, 0xD15C));
  const std::size_t s = conv_extent(conv_extent(side, 3, 2, 1), 3, 2, 1);
  flat_ = 16 * s * s;
  add_param("conv1.w", {8, channels, 3, 3}, he_std(channels * 9), rng);
  add_param("conv1.b", {8}, 0.0, rng);
  add_param("conv2.w", {16, 8, 3, 3}, he_std(8 * 9), rng);
  add_param("conv2.b", {16}, 0.0, rng);
  add_param("fc.w", {1, flat_}, std::sqrt(1.0 / static_cast<double>(flat_)), rng);
  add_param("fc.b", {1}, 0.0, rng);
}

Tensor Discriminator::forward(Graph& g, const Tensor& x) const {
  require_shape("Discriminator", x, input_shape());
  Tensor h = ops::leaky_relu(g, conv_block(g, x, param(0), param(1), 2), 0.2);
  h = ops::leaky_relu(g, conv_block(g, h, param(2), param(3), 2), 0.2);
  h = ops::dense(g, ops::reshape(g, h, {flat_}), param(4), param(5));
  return ops::clamp(g, ops::sigmoid(g, h), kDiscriminatorClamp, 1.0 - kDiscriminatorClamp);
}

}  // namespace madv::nets
