#include <doctest.h>

#include <cmath>
#include <random>

#include "madv/gradcheck.hpp"
#include "madv/io.hpp"
#include "madv/nets.hpp"
#include "madv/ops.hpp"
#include "madv/synthdata.hpp"

using namespace madv;
using namespace madv::nets;

namespace {

Tensor uniform(Shape shape, Rng& rng, double lo, double hi) {
  std::uniform_real_distribution<double> uni(lo, hi);
  Tensor t(std::move(shape));
  for (auto& v : t.data()) v = uni(rng);
  return t;
}

void fill_quadrant(Tensor& x, std::size_t q) {
  const std::size_t oi = (q / 2) * 16, oj = (q % 2) * 16;
  for (std::size_t c = 0; c < 3; ++c) {
    for (std::size_t i = 0; i < 16; ++i) {
      for (std::size_t j = 0; j < 16; ++j) x[(c * 32 + i + oi) * 32 + j + oj] = 0.9;
    }
  }
}

// Class 1 images carry a bright top-left quadrant; class 0 images never do.
// Each other quadrant is bright with probability `distractor` in both
// classes, so brightness elsewhere carries no class evidence.
Tensor quadrant_image(std::size_t label, double distractor, Rng& rng) {
  std::uniform_real_distribution<double> coin(0.0, 1.0);
  Tensor x = uniform({3, 32, 32}, rng, 0.0, 0.4);
  if (label == 1) fill_quadrant(x, 0);
  for (std::size_t q = 1; q < 4; ++q) {
    if (coin(rng) < distractor) fill_quadrant(x, q);
  }
  return x;
}

Dataset quadrant_dataset(std::size_t per_class, std::uint64_t seed, double distractor = 0.0) {
  Rng rng(seed);
  Dataset d;
  d.classes = 2;
  for (std::size_t k = 0; k < 2 * per_class; ++k) {
    const std::size_t label = k % 2;
    (k < 2 * per_class * 4 / 5 ? d.train : d.test).push_back({quadrant_image(label, distractor, rng), label});
  }
  return d;
}

void set_param(Network& net, const std::string& name, double value) {
  auto params = net.parameters();
  std::vector<NamedTensor> edited;
  for (const auto& p : params) {
    Tensor t = p.tensor.detach();
    if (p.name == name) {
      for (auto& v : t.data()) v = value;
    }
    edited.push_back({p.name, t});
  }
  net.load_parameters(edited);
}

}  // namespace

TEST_CASE("architectures have the documented shapes") {
  Rng rng(1);
  Classifier f(ClassifierSpec{}, 3);
  CHECK(f.infer(uniform({3, 64, 64}, rng, 0, 1)).shape() == Shape{10});
  for (std::size_t s : {8u, 16u, 24u}) {
    Generator g(s, 4);
    Discriminator d(s, 5);
    const Tensor patch = g.infer(uniform({32}, rng, -2, 2));
    CHECK(patch.shape() == Shape{3, s, s});
    CHECK(d.infer(patch).shape() == Shape{1});
  }
  CHECK_THROWS_AS(Generator(10, 1), std::invalid_argument);
  AudioClassifier af(synthdata::kCommandLength, 4, 6);
  CHECK(af.infer(uniform({1, synthdata::kCommandLength}, rng, -1, 1)).shape() == Shape{4});
  AudioGenerator ag(synthdata::kChirpLength, 7);
  CHECK(ag.infer(uniform({32}, rng, -1, 1)).shape() == Shape{1, synthdata::kChirpLength});
  AudioDiscriminator ad(synthdata::kChirpLength, 8);
  CHECK(ad.infer(uniform({1, synthdata::kChirpLength}, rng, -1, 1)).shape() == Shape{1});
}

TEST_CASE("generator output stays in [0,1] and is deterministic") {
  Generator g(16, 11);
  Rng rng(2);
  std::normal_distribution<double> normal;
  for (int k = 0; k < 10000; ++k) {
    Tensor z(Shape{32});
    for (auto& v : z.data()) v = 3.0 * normal(rng);
    const Tensor p = g.infer(z);
    for (double v : p.values()) REQUIRE((v >= 0.0 && v <= 1.0));
    if (k == 0) CHECK(g.infer(z).values() == p.values());
  }
}

TEST_CASE("discriminator output is strictly inside (0,1)") {
  Discriminator d(16, 12);
  Rng rng(3);
  for (int k = 0; k < 50; ++k) {
    const double v = d.infer(uniform({3, 16, 16}, rng, -50, 50)).item();
    CHECK(v > 0.0);
    CHECK(v < 1.0);
  }
}

TEST_CASE("uniform logits give ln K") {
  Classifier f(ClassifierSpec{}, 1);
  set_param(f, "fc2.w", 0.0);
  set_param(f, "fc2.b", 0.0);
  Rng rng(4);
  Graph g;
  CHECK(classifier_loss(g, f, uniform({3, 64, 64}, rng, 0, 1), 3).item() == doctest::Approx(std::log(10.0)));
  Graph g2;
  CHECK_THROWS_AS(classifier_loss(g2, f, Tensor(Shape{3, 64, 64}), 10), std::out_of_range);
}

TEST_CASE("classifier loss gradient w.r.t. the image matches finite differences") {
  Classifier f(ClassifierSpec{3, 12, 12, 4}, 2);
  Rng rng(5);
  const Tensor base = uniform({3, 12, 12}, rng, 0.2, 0.8);
  Tensor image = base.clone();
  image.set_requires_grad(true);
  const auto report = grad_check([&](Graph& g, const Tensor&) { return classifier_loss(g, f, image, 1); }, {1},
                                 {{"image", image}});
  INFO("max rel err " << report.max_rel_error);
  CHECK(report.passed);
}

TEST_CASE("one targeted step on the image lowers the loss") {
  Classifier f(ClassifierSpec{}, 9);
  Rng rng(6);
  Tensor image = uniform({3, 64, 64}, rng, 0.2, 0.8);
  image.set_requires_grad(true);
  image.zero_grad();
  Graph g;
  const Tensor loss = classifier_loss(g, f, image, 2);
  backprop(g, loss);
  Tensor stepped = image.detach();
  for (std::size_t i = 0; i < stepped.size(); ++i) stepped[i] -= 1e-3 * image.grad()[i];
  Graph g2, g3;
  CHECK(classifier_loss(g2, f, stepped, 2).item() < loss.item());
  CHECK(classifier_loss(g3, f, image.detach(), 2).item() == loss.item());
}

TEST_CASE("training is deterministic and handles the one-class case") {
  Dataset one;
  one.classes = 1;
  Rng rng(7);
  for (int i = 0; i < 6; ++i) one.train.push_back({uniform({3, 16, 16}, rng, 0, 1), 0});
  one.test = one.train;
  const auto a = train_classifier(one, 1, 3);
  CHECK(a.report.test_accuracy == 1.0);

  const Dataset d = quadrant_dataset(10, 8);
  const auto x = train_classifier(d, 2, 4);
  const auto y = train_classifier(d, 2, 4);
  for (std::size_t k = 0; k < x.classifier.parameters().size(); ++k) {
    CHECK(x.classifier.parameters()[k].tensor.values() == y.classifier.parameters()[k].tensor.values());
  }
  CHECK_THROWS(train_classifier(Dataset{}, 1, 1));
}

TEST_CASE("copies and clones own independent weights") {
  Classifier f(ClassifierSpec{3, 16, 16, 3}, 1);
  auto c = f.clone();
  Classifier copy = f;
  set_param(*c, "fc2.b", 5.0);
  set_param(copy, "fc1.b", 2.0);
  CHECK(f.parameters().back().tensor[0] != 5.0);
  CHECK(f.parameters()[5].tensor[0] != 2.0);
}

TEST_CASE("gan_forward yields all three outputs on one graph") {
  Generator gen(8, 1);
  Discriminator dis(8, 2);
  Rng rng(9);
  const Tensor z = uniform({32}, rng, -1, 1);
  Graph g;
  const auto out = gan_forward(g, gen, dis, z, uniform({3, 8, 8}, rng, 0, 1));
  CHECK(out.fake.shape() == Shape{3, 8, 8});
  CHECK(out.d_real.item() > 0.0);
  CHECK(out.d_fake.item() < 1.0);
  CHECK(g.size() > 0);
  Graph g2;
  CHECK_THROWS_AS(gan_forward(g2, gen, dis, z, Tensor(Shape{3, 16, 16})), std::invalid_argument);
}

TEST_CASE("Grad-CAM concentrates on a discriminative quadrant") {
  const Dataset d = quadrant_dataset(60, 10, 0.3);
  const auto trained = train_classifier(d, 6, 2);
  REQUIRE(trained.report.test_accuracy >= 0.9);
  Rng rng(20);
  double inside = 0.0, total = 0.0;
  for (int k = 0; k < 20; ++k) {
    const Tensor x = quadrant_image(1, 0.0, rng);
    const Tensor cam = grad_cam(trained.classifier, x, 1);
    REQUIRE(cam.shape() == Shape{32, 32});
    for (std::size_t i = 0; i < 32; ++i) {
      for (std::size_t j = 0; j < 32; ++j) {
        const double v = cam[i * 32 + j];
        REQUIRE((v >= 0.0 && v <= 1.0));
        total += v;
        if (i < 16 && j < 16) inside += v;
      }
    }
  }
  INFO("top-left share " << inside / total);
  REQUIRE(total > 0.0);
  CHECK(inside / total >= 0.6);
}

TEST_CASE("Grad-CAM edge cases") {
  Classifier f(ClassifierSpec{3, 16, 16, 3}, 4);
  Rng rng(11);
  const Tensor img = uniform({3, 16, 16}, rng, 0, 1);
  CHECK_THROWS_AS(grad_cam(f, img, 3), std::out_of_range);

  Classifier shifted = f;
  set_param(shifted, "fc2.b", 4.0);
  Classifier unshifted = f;
  set_param(unshifted, "fc2.b", 0.0);
  CHECK(grad_cam(shifted, img, 1).values() == grad_cam(unshifted, img, 1).values());

  Classifier silent = f;
  set_param(silent, "fc2.w", 0.0);
  for (double v : grad_cam(silent, img, 0).values()) CHECK(v == 0.0);
}

TEST_CASE("checkpoint reload reproduces real32-quantised forward passes") {
  const Dataset d = quadrant_dataset(10, 12);
  const auto trained = train_classifier(d, 2, 5);
  Classifier quantised = trained.classifier;
  std::vector<NamedTensor> q;
  for (const auto& p : trained.classifier.parameters()) q.push_back({p.name, io::quantize_f32(p.tensor)});
  quantised.load_parameters(q);
  Classifier reloaded(ClassifierSpec{3, 32, 32, 2}, 0);
  reloaded.load_parameters(io::decode_checkpoint(io::encode_checkpoint(trained.classifier.parameters())));
  for (const auto& ex : d.test) CHECK(reloaded.infer(ex.input).values() == quantised.infer(ex.input).values());
  CHECK(accuracy(reloaded, d.test) == accuracy(quantised, d.test));
  CHECK_THROWS(reloaded.load_parameters({}));
}

TEST_CASE("the 1-D classifier learns the tone commands") {
  const auto corpus = synthdata::gen_audio(40, 1, 3);
  const auto trained = train_audio_classifier(corpus.commands, 6, 2);
  INFO("held-out accuracy " << trained.report.test_accuracy);
  CHECK(trained.report.test_accuracy >= 0.95);
}
