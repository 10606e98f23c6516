#pragma once

#include <cstddef>
#include <cstdint>
#include <memory>
#include <string>
#include <vector>

#include "madv/dataset.hpp"
#include "madv/graph.hpp"
#include "madv/rng.hpp"
#include "madv/tensor.hpp"

namespace madv::nets {

/// Owns a list of named parameter tensors. Copying a Network deep-copies its
/// parameters, so copies train independently.
class Network {
 public:
  virtual ~Network() = default;
  Network(const Network& other);
  Network& operator=(const Network& other);
  Network(Network&&) noexcept = default;
  Network& operator=(Network&&) noexcept = default;

  virtual Tensor forward(Graph& g, const Tensor& x) const = 0;
  /// Deep copy with the same concrete type.
  virtual std::unique_ptr<Network> clone() const = 0;
  virtual Shape input_shape() const = 0;
  virtual Shape output_shape() const = 0;

  /// Forward pass with no tape; returns a detached result.
  Tensor infer(const Tensor& x) const;

  const std::vector<NamedTensor>& parameters() const { return params_; }
  std::vector<Tensor> parameter_tensors() const;
  std::size_t parameter_count() const;
  /// Toggles requires_grad on every parameter.
  void set_trainable(bool on);
  bool trainable() const;
  /// Copies values from a checkpoint-style list; names and shapes must match.
  void load_parameters(const std::vector<NamedTensor>& values);

 protected:
  Network() = default;
  const Tensor& param(std::size_t index) const { return params_[index].tensor; }
  /// Normal(0, std) initialised parameter; std = 0 gives zeros.
  void add_param(std::string name, Shape shape, double std, Rng& rng);

 private:
  std::vector<NamedTensor> params_;
};

/// Restores requires_grad flags on scope exit.
class FrozenScope {
 public:
  explicit FrozenScope(Network& net) : net_(net), was_(net.trainable()) { net_.set_trainable(false); }
  ~FrozenScope() { net_.set_trainable(was_); }
  FrozenScope(const FrozenScope&) = delete;
  FrozenScope& operator=(const FrozenScope&) = delete;

 private:
  Network& net_;
  bool was_;
};

// ------------------------------------------------------------------ image

struct ClassifierSpec {
  std::size_t channels = 3;
  std::size_t height = 64;
  std::size_t width = 64;
  std::size_t classes = 10;
};

/// conv(8, 3x3, s2) -> relu -> conv(16, 3x3, s2) -> relu -> dense 64 -> relu
/// -> dense K. Inputs are [3,64,64] in [0,1] by default.
class Classifier : public Network {
 public:
  Classifier(ClassifierSpec spec, std::uint64_t seed);

  Tensor forward(Graph& g, const Tensor& x) const override;
  std::unique_ptr<Network> clone() const override { return std::make_unique<Classifier>(*this); }
  Shape input_shape() const override { return {spec_.channels, spec_.height, spec_.width}; }
  Shape output_shape() const override { return {spec_.classes}; }

  /// Post-relu activations of the last conv layer.
  Tensor features(Graph& g, const Tensor& x) const;
  /// Logits from last-conv activations.
  Tensor head(Graph& g, const Tensor& features) const;

  const ClassifierSpec& spec() const { return spec_; }
  std::size_t num_classes() const { return spec_.classes; }

 private:
  ClassifierSpec spec_;
  std::size_t flat_ = 0;
};

/// Latent [d] -> dense 32 x (s/4) x (s/4) -> relu -> (upsample x2 -> conv
/// 3x3 -> relu) twice -> conv 3x3 to 3 channels -> tanh mapped to [0,1].
class Generator : public Network {
 public:
  Generator(std::size_t side, std::uint64_t seed, std::size_t latent_dim = 32);

  Tensor forward(Graph& g, const Tensor& z) const override;
  std::unique_ptr<Network> clone() const override { return std::make_unique<Generator>(*this); }
  Shape input_shape() const override { return {latent_dim_}; }
  Shape output_shape() const override { return {3, side_, side_}; }
  std::size_t side() const { return side_; }
  std::size_t latent_dim() const { return latent_dim_; }

 private:
  std::size_t side_;
  std::size_t latent_dim_;
  std::size_t base_;
};

/// conv(8, s2) -> leaky -> conv(16, s2) -> leaky -> dense 1 -> sigmoid,
/// clamped to [1e-7, 1 - 1e-7].
class Discriminator : public Network {
 public:
  Discriminator(std::size_t side, std::uint64_t seed, std::size_t channels = 3);

  Tensor forward(Graph& g, const Tensor& x) const override;
  std::unique_ptr<Network> clone() const override { return std::make_unique<Discriminator>(*this); }
  Shape input_shape() const override { return {channels_, side_, side_}; }
  Shape output_shape() const override { return {1}; }

 private:
  std::size_t side_;
  std::size_t channels_;
  std::size_t flat_;
};

// ------------------------------------------------------------------ audio

/// conv1d(8, k9, s4) -> relu -> conv1d(16, k9, s4) -> relu -> dense 64 ->
/// relu -> dense K over [1, length] waveforms.
class AudioClassifier : public Network {
 public:
  AudioClassifier(std::size_t length, std::size_t classes, std::uint64_t seed);

  Tensor forward(Graph& g, const Tensor& x) const override;
  std::unique_ptr<Network> clone() const override { return std::make_unique<AudioClassifier>(*this); }
  Shape input_shape() const override { return {1, length_}; }
  Shape output_shape() const override { return {classes_}; }
  std::size_t num_classes() const { return classes_; }

 private:
  std::size_t length_;
  std::size_t classes_;
  std::size_t flat_;
};

/// Latent -> dense 16 x (L/4) -> relu -> (upsample x2 -> conv1d k5 -> relu)
/// twice -> conv1d k5 to 1 channel -> tanh. Emits [1, L] in [-1,1].
class AudioGenerator : public Network {
 public:
  AudioGenerator(std::size_t length, std::uint64_t seed, std::size_t latent_dim = 32);

  Tensor forward(Graph& g, const Tensor& z) const override;
  std::unique_ptr<Network> clone() const override { return std::make_unique<AudioGenerator>(*this); }
  Shape input_shape() const override { return {latent_dim_}; }
  Shape output_shape() const override { return {1, length_}; }
  std::size_t latent_dim() const { return latent_dim_; }

 private:
  std::size_t length_;
  std::size_t latent_dim_;
};

class AudioDiscriminator : public Network {
 public:
  AudioDiscriminator(std::size_t length, std::uint64_t seed);

  Tensor forward(Graph& g, const Tensor& x) const override;
  std::unique_ptr<Network> clone() const override { return std::make_unique<AudioDiscriminator>(*this); }
  Shape input_shape() const override { return {1, length_}; }
  Shape output_shape() const override { return {1}; }

 private:
  std::size_t length_;
  std::size_t flat_;
};

constexpr double kDiscriminatorClamp = 1e-7;

// ------------------------------------------------------------- operations

/// Targeted cross-entropy of f(image) toward class t; differentiable w.r.t.
/// the image when it is tracked.
Tensor classifier_loss(Graph& g, const Network& f, const Tensor& image, std::size_t target);

std::size_t predict(const Network& f, const Tensor& x);
double accuracy(const Network& f, const std::vector<Example>& examples);

struct TrainOptions {
  std::size_t epochs = 10;
  std::size_t batch = 16;
  double lr = 1e-3;
  std::uint64_t seed = 0;
};

struct TrainReport {
  std::vector<double> epoch_loss;
  double test_accuracy = 0.0;
};

/// Minibatch Adam on mean cross-entropy; shuffling is seeded.
TrainReport fit(Network& net, const Dataset& data, const TrainOptions& options);

struct TrainedClassifier {
  Classifier classifier;
  TrainReport report;
};

/// Trains a glyph-sized classifier; deterministic given the seed.
TrainedClassifier train_classifier(const Dataset& data, std::size_t epochs, std::uint64_t seed);

struct TrainedAudioClassifier {
  AudioClassifier classifier;
  TrainReport report;
};
TrainedAudioClassifier train_audio_classifier(const Dataset& data, std::size_t epochs, std::uint64_t seed);

struct GanOutputs {
  Tensor d_real;
  Tensor d_fake;
  Tensor fake;
};

/// D(real), D(G(z)) and G(z) on one graph.
GanOutputs gan_forward(Graph& g, const Network& generator, const Network& discriminator, const Tensor& z,
                       const Tensor& real);

/// Grad-CAM over the last conv layer: channel weights are spatial means of
/// d logit[cls] / d activation, the map is relu of the weighted sum,
/// bilinearly upsampled to the input size and divided by its maximum.
/// Returns [H,W] in [0,1]; an all-zero map stays all-zero.
Tensor grad_cam(const Classifier& f, const Tensor& image, std::size_t cls);

/// Bilinear resize of a single [h,w] map with half-pixel centres.
Tensor resize_map(const Tensor& map, std::size_t height, std::size_t width);

}  // namespace madv::nets
