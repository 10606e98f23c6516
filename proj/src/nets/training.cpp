#include <algorithm>
#include <numeric>
#include <stdexcept>

#include "madv/nets.hpp"
#include "madv/ops.hpp"
#include "madv/optim.hpp"

namespace madv::nets {

Tensor classifier_loss(Graph& g, const Network& f, const Tensor& image, std::size_t target) {
  const std::size_t classes = f.output_shape().at(0);
  if (target >= classes) {
    throw std::out_of_range("target class " + std::to_string(target) + " outside [0, " + std::to_string(classes) +
                            ")");
  }
  return ops::softmax_cross_entropy(g, f.forward(g, image), target);
}

std::size_t predict(const Network& f, const Tensor& x) { return argmax(f.infer(x).data()); }

double accuracy(const Network& f, const std::vector<Example>& examples) {
  if (examples.empty()) return 0.0;
  std::size_t hits = 0;
  for (const auto& ex : examples) hits += predict(f, ex.input) == ex.label ? 1 : 0;
  return static_cast<double>(hits) / static_cast<double>(examples.size());
}

TrainReport fit(Network& net, const Dataset& data, const TrainOptions& options) {
  if (data.train.empty()) throw std::invalid_argument("cannot train on an empty dataset");
  if (options.batch == 0) throw std::invalid_argument("batch size must be positive");
  net.set_trainable(true);
  auto params = net.parameter_tensors();
  AdamState adam(params, AdamOptions{.lr = options.lr});
  Rng rng(derive_seed(options.seed, 0x7EA1));
  std::vector<std::size_t> order(data.train.size());
  std::iota(order.begin(), order.end(), 0);

  TrainReport report;
  for (std::size_t epoch = 0; epoch < options.epochs; ++epoch) {
    std::shuffle(order.begin(), order.end(), rng);
    double total = 0.0;
    for (std::size_t start = 0; start < order.size(); start += options.batch) {
      const std::size_t end = std::min(order.size(), start + options.batch);
      const double weight = 1.0 / static_cast<double>(end - start);
      adam.zero_grad();
      for (std::size_t k = start; k < end; ++k) {
        const Example& ex = data.train[order[k]];
        Graph g;
        Tensor loss = ops::scale(g, classifier_loss(g, net, ex.input, ex.label), weight);
        total += loss.item() / weight;
        backprop(g, loss);
      }
      adam.step();
    }
    report.epoch_loss.push_back(total / static_cast<double>(order.size()));
  }
  net.set_trainable(false);
  report.test_accuracy = accuracy(net, data.test.empty() ? data.train : data.test);
  return report;
}

namespace {

void require_nonempty(const Dataset& data) {
  if (data.train.empty() || data.classes == 0) throw std::invalid_argument("cannot train on an empty dataset");
}

}  // namespace

TrainedClassifier train_classifier(const Dataset& data, std::size_t epochs, std::uint64_t seed) {
  require_nonempty(data);
  const Tensor& x = data.train.front().input;
  if (x.rank() != 3) throw std::invalid_argument("image classifier expects [c,h,w] inputs, got " + shape_str(x.shape()));
  Classifier net(ClassifierSpec{x.dim(0), x.dim(1), x.dim(2), data.classes}, seed);
  TrainOptions options;
  options.epochs = epochs;
  options.seed = seed;
  TrainReport report = fit(net, data, options);
  return {std::move(net), std::move(report)};
}

TrainedAudioClassifier train_audio_classifier(const Dataset& data, std::size_t epochs, std::uint64_t seed) {
  require_nonempty(data);
  const Tensor& x = data.train.front().input;
  if (x.rank() != 2 || x.dim(0) != 1) {
    throw std::invalid_argument("audio classifier expects [1,L] inputs, got " + shape_str(x.shape()));
  }
  AudioClassifier net(x.dim(1), data.classes, seed);
  TrainOptions options;
  options.epochs = epochs;
  options.seed = seed;
  TrainReport report = fit(net, data, options);
  return {std::move(net), std::move(report)};
}

GanOutputs gan_forward(Graph& g, const Network& generator, const Network& discriminator, const Tensor& z,
                       const Tensor& real) {
  if (real.shape() != generator.output_shape()) {
    throw std::invalid_argument("gan_forward: real sample " + shape_str(real.shape()) +
                                " does not match generator output " + shape_str(generator.output_shape()));
  }
  GanOutputs out;
  out.fake = generator.forward(g, z);
  out.d_real = discriminator.forward(g, real);
  out.d_fake = discriminator.forward(g, out.fake);
  return out;
}

}  // namespace madv::nets
