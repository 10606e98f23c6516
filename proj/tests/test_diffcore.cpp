#include <doctest.h>

#include <cmath>
#include <functional>
#include <random>

#include "madv/gradcheck.hpp"
#include "madv/ops.hpp"
#include "madv/optim.hpp"
#include "madv/rng.hpp"
#include "op_cases.hpp"

using namespace madv;
using namespace madv::testing;

TEST_CASE("every differentiable op matches central differences over 100+ random cases") {
  const auto cases = op_cases();
  std::size_t total = 0;
  for (std::uint64_t seed = 0; seed < 5; ++seed) {
    for (const auto& c : cases) {
      Rng rng(derive_seed(seed, total));
      std::vector<Tensor> params;
      std::vector<NamedTensor> named;
      for (std::size_t i = 0; i < c.params.size(); ++i) {
        params.push_back(param(c.params[i], rng));
        named.push_back({"p" + std::to_string(i), params.back()});
      }
      GradCheckOptions opt;
      opt.check_input = true;
      opt.seed = seed * 977 + total;
      const auto report = grad_check(
          [&](Graph& g, const Tensor& x) { return project(g, c.build(g, x, params), 17 + seed); }, c.input, named,
          opt);
      INFO(c.name << " seed " << seed << " max rel err " << report.max_rel_error);
      CHECK(report.passed);
      CHECK(report.max_rel_error < 1e-4);
      ++total;
    }
  }
  CHECK(total >= 100);
}

TEST_CASE("fan-out accumulates gradient from every consumer") {
  Tensor x(Shape{3}, std::vector<double>{1.0, -2.0, 0.5});
  x.set_requires_grad(true);
  x.zero_grad();
  Graph g;
  // loss = sum(x*x) + sum(3x) -> d/dx = 2x + 3
  const Tensor loss = ops::add(g, ops::sum(g, ops::mul(g, x, x)), ops::sum(g, ops::scale(g, x, 3.0)));
  backprop(g, loss);
  CHECK(x.grad()[0] == doctest::Approx(5.0));
  CHECK(x.grad()[1] == doctest::Approx(-1.0));
  CHECK(x.grad()[2] == doctest::Approx(4.0));
  CHECK(g.is_topological());
  CHECK(g.consumed());
}

TEST_CASE("a deep fan-out chain visits each node once") {
  Tensor x = Tensor::scalar(0.7);
  x.set_requires_grad(true);
  x.zero_grad();
  Graph g;
  Tensor y = x;
  for (int i = 0; i < 20; ++i) y = ops::add(g, y, y);  // y = 2^20 x
  backprop(g, y);
  CHECK(g.visits() == g.size());
  CHECK(x.grad()[0] == doctest::Approx(std::pow(2.0, 20)));
}

TEST_CASE("untracked operands produce no tape") {
  Tensor a(Shape{2}, 1.0), b(Shape{2}, 2.0);
  Graph g;
  const Tensor c = ops::mul(g, a, b);
  CHECK_FALSE(c.tracked());
  CHECK(g.size() == 0);

  Tensor p(Shape{2}, 1.0);
  p.set_requires_grad(true);
  Graph quiet = Graph::no_record();
  CHECK_FALSE(ops::mul(quiet, p, b).tracked());
  CHECK(quiet.size() == 0);
}

TEST_CASE("a graph is single-use") {
  Tensor x = Tensor::scalar(1.0);
  x.set_requires_grad(true);
  x.zero_grad();
  Graph g;
  const Tensor y = ops::scale(g, x, 2.0);
  backprop(g, y);
  CHECK_THROWS(backprop(g, y));
}

TEST_CASE("grad_check flags a deliberately wrong backward rule") {
  // y = x^2 whose recorded gradient is x instead of 2x.
  auto broken_square = [](Graph& g, const Tensor& x) {
    Tensor out(x.shape());
    for (std::size_t i = 0; i < x.size(); ++i) out[i] = x[i] * x[i];
    if (x.tracked()) {
      g.record("broken_square", {x}, out, [x](std::span<const double> gy) {
        auto gx = x.grad_mut();
        for (std::size_t i = 0; i < gx.size(); ++i) gx[i] += gy[i] * x[i];
      });
    }
    return out;
  };
  GradCheckOptions opt;
  opt.check_input = true;
  const auto report = grad_check([&](Graph& g, const Tensor& x) { return ops::sum(g, broken_square(g, x)); }, {4}, {},
                                 opt);
  CHECK_FALSE(report.passed);
  CHECK(report.failures.size() == 4);
  CHECK(report.max_rel_error > 0.4);
}

TEST_CASE("convolution is cross-correlation without kernel flip") {
  Tensor x(Shape{1, 1, 3}, std::vector<double>{1.0, 2.0, 3.0});
  Tensor k(Shape{1, 1, 1, 2}, std::vector<double>{10.0, 1.0});
  Graph g;
  const Tensor y = ops::conv2d(g, x, k, 1, 0);
  REQUIRE(y.shape() == Shape{1, 1, 2});
  CHECK(y[0] == doctest::Approx(12.0));
  CHECK(y[1] == doctest::Approx(23.0));
}

TEST_CASE("conv shape errors are reported") {
  Graph g;
  CHECK_THROWS_AS(ops::conv2d(g, Tensor(Shape{1, 2, 2}), Tensor(Shape{1, 1, 5, 5}), 1, 0), std::invalid_argument);
  CHECK_THROWS_AS(ops::conv2d(g, Tensor(Shape{2, 4, 4}), Tensor(Shape{1, 3, 3, 3}), 1, 1), std::invalid_argument);
  CHECK_THROWS_AS(ops::add(g, Tensor(Shape{2}), Tensor(Shape{3})), std::invalid_argument);
}

TEST_CASE("softmax cross-entropy is stable for large logits") {
  Tensor logits(Shape{3}, std::vector<double>{1000.0, 0.0, -1000.0});
  Graph g;
  CHECK(ops::softmax_cross_entropy(g, logits, 0).item() == doctest::Approx(0.0));
  Graph g2;
  CHECK(ops::softmax_cross_entropy(g2, logits, 1).item() == doctest::Approx(1000.0));
  const auto p = softmax(logits.values());
  CHECK(std::isfinite(p[2]));
  CHECK(argmax(logits.values()) == 0);
}

TEST_CASE("Adam's first step moves each parameter by lr against its gradient sign") {
  Tensor w(Shape{3}, std::vector<double>{0.0, 1.0, -1.0});
  w.set_requires_grad(true);
  AdamState adam({w}, {.lr = 0.1});
  adam.zero_grad();
  auto gw = w.grad_mut();
  gw[0] = 2.0;
  gw[1] = -0.001;
  gw[2] = 0.0;
  adam.step();
  // Bias-corrected m/sqrt(v) is sign(g) on step one.
  CHECK(w[0] == doctest::Approx(-0.1).epsilon(1e-6));
  CHECK(w[1] == doctest::Approx(1.1).epsilon(1e-4));
  CHECK(w[2] == doctest::Approx(-1.0));
  CHECK(adam.steps() == 1);
}

TEST_CASE("Adam minimises a quadratic") {
  Tensor w(Shape{2}, std::vector<double>{3.0, -2.0});
  w.set_requires_grad(true);
  AdamState adam({w}, {.lr = 0.05});
  for (int i = 0; i < 2000; ++i) {
    adam.zero_grad();
    Graph g;
    Tensor target(Shape{2}, std::vector<double>{0.5, 0.25});
    const Tensor d = ops::sub(g, w, target);
    backprop(g, ops::dot(g, d, d));
    adam.step();
  }
  CHECK(w[0] == doctest::Approx(0.5).epsilon(1e-3));
  CHECK(w[1] == doctest::Approx(0.25).epsilon(1e-3));
}

TEST_CASE("Adam rejects parameters without gradients") {
  Tensor w(Shape{2});
  w.set_requires_grad(true);
  AdamState adam({w});
  CHECK_THROWS(adam.step());
}
