#include <stdexcept>

#include "madv/ops.hpp"
#include "steps.hpp"

namespace madv::attack {

const char* method_name(Method m) { return m == Method::patch ? "patch" : "pepg"; }

Tensor sample_latent(std::size_t dim, Rng& rng) {
  std::normal_distribution<double> normal(0.0, 1.0);
  Tensor z(Shape{dim});
  for (auto& v : z.data()) v = normal(rng);
  return z;
}

namespace detail {

Tensor generator_term(Graph& g, const Tensor& d_fake, GeneratorLoss kind) {
  const Tensor d = ops::reshape(g, d_fake, {});
  if (kind == GeneratorLoss::non_saturating) return ops::scale(g, ops::log(g, d), -1.0);
  return ops::log(g, ops::add_scalar(g, ops::scale(g, d, -1.0), 1.0));
}

double discriminator_step(const nets::Network& generator, nets::Network& discriminator, AdamState& adam,
                          const std::vector<Tensor>& references, std::size_t m, Rng& rng) {
  std::uniform_int_distribution<std::size_t> pick(0, references.size() - 1);
  const std::size_t latent = generator.input_shape().at(0);
  const double weight = -1.0 / static_cast<double>(m);
  adam.zero_grad();
  double total = 0.0;
  for (std::size_t i = 0; i < m; ++i) {
    const Tensor& real = references[pick(rng)];
    const Tensor fake = generator.infer(sample_latent(latent, rng));
    Graph g;
    Tensor d_real = discriminator.forward(g, real);
    Tensor d_fake = discriminator.forward(g, fake);
    Tensor fake_term = ops::log(g, ops::add_scalar(g, ops::scale(g, d_fake, -1.0), 1.0));
    Tensor loss = ops::scale(g, ops::add(g, ops::log(g, d_real), fake_term), weight);
    total += loss.item();
    backprop(g, loss);
  }
  adam.step();
  return total;
}

void check_references(const std::vector<Tensor>& references, const Shape& expected) {
  if (references.empty()) throw std::invalid_argument("reference set is empty");
  for (std::size_t i = 0; i < references.size(); ++i) {
    if (references[i].shape() != expected) {
      throw std::invalid_argument("reference " + std::to_string(i) + " has shape " +
                                  shape_str(references[i].shape()) + ", expected " + shape_str(expected));
    }
  }
}

}  // namespace detail

GanReport train_gan(nets::Network& generator, nets::Network& discriminator, const std::vector<Tensor>& references,
                    const GanOptions& options) {
  detail::check_references(references, generator.output_shape());
  if (options.batch == 0) throw std::invalid_argument("GAN batch size must be positive");
  generator.set_trainable(true);
  discriminator.set_trainable(true);
  const AdamOptions adam_options{.lr = options.lr, .beta1 = options.beta1};
  AdamState adam_d(discriminator.parameter_tensors(), adam_options);
  AdamState adam_g(generator.parameter_tensors(), adam_options);
  Rng rng(derive_seed(options.seed, 0x6A4));
  const std::size_t m = options.batch;
  const std::size_t latent = generator.input_shape().at(0);

  GanReport report;
  for (std::size_t it = 0; it < options.iterations; ++it) {
    report.d_loss.push_back(detail::discriminator_step(generator, discriminator, adam_d, references, m, rng));

    nets::FrozenScope frozen(discriminator);
    adam_g.zero_grad();
    double total = 0.0;
    for (std::size_t i = 0; i < m; ++i) {
      Graph g;
      Tensor fake = generator.forward(g, sample_latent(latent, rng));
      Tensor term = detail::generator_term(g, discriminator.forward(g, fake), options.generator_loss);
      Tensor loss = ops::scale(g, term, 1.0 / static_cast<double>(m));
      total += loss.item();
      backprop(g, loss);
    }
    adam_g.step();
    report.g_loss.push_back(total);
  }
  generator.set_trainable(false);
  discriminator.set_trainable(false);
  return report;
}

GanPair pretrain_gan(const std::vector<Tensor>& references, const GanOptions& options) {
  if (references.empty()) throw std::invalid_argument("reference set is empty");
  const Shape& shape = references.front().shape();
  if (shape.size() != 3 || shape[0] != 3 || shape[1] != shape[2]) {
    throw std::invalid_argument("image references must be [3,s,s], got " + shape_str(shape));
  }
  nets::Generator generator(shape[1], derive_seed(options.seed, 1));
  nets::Discriminator discriminator(shape[1], derive_seed(options.seed, 2));
  GanReport report = train_gan(generator, discriminator, references, options);
  return {std::move(generator), std::move(discriminator), std::move(report)};
}

AudioGanPair pretrain_audio_gan(const std::vector<Tensor>& references, const GanOptions& options) {
  if (references.empty()) throw std::invalid_argument("reference set is empty");
  const Shape& shape = references.front().shape();
  if (shape.size() != 2 || shape[0] != 1) {
    throw std::invalid_argument("audio references must be [1,L], got " + shape_str(shape));
  }
  nets::AudioGenerator generator(shape[1], derive_seed(options.seed, 1));
  nets::AudioDiscriminator discriminator(shape[1], derive_seed(options.seed, 2));
  GanReport report = train_gan(generator, discriminator, references, options);
  return {std::move(generator), std::move(discriminator), std::move(report)};
}

double discriminator_accuracy(const nets::Network& generator, const nets::Network& discriminator,
                              const std::vector<Tensor>& references, std::size_t count, std::uint64_t seed) {
  detail::check_references(references, generator.output_shape());
  if (count == 0) throw std::invalid_argument("count must be positive");
  Rng rng(seed);
  std::uniform_int_distribution<std::size_t> pick(0, references.size() - 1);
  const std::size_t latent = generator.input_shape().at(0);
  std::size_t correct = 0;
  for (std::size_t i = 0; i < count; ++i) {
    correct += discriminator.infer(references[pick(rng)]).item() > 0.5 ? 1 : 0;
    correct += discriminator.infer(generator.infer(sample_latent(latent, rng))).item() < 0.5 ? 1 : 0;
  }
  return static_cast<double>(correct) / static_cast<double>(2 * count);
}

}  // namespace madv::attack
