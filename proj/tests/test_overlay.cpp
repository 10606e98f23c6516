#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <numbers>
#include <random>

#include "madv/gradcheck.hpp"
#include "madv/ops.hpp"
#include "madv/overlay.hpp"

using namespace madv;
using namespace madv::overlay;

namespace {

Tensor uniform(Shape shape, Rng& rng, double lo, double hi) {
  std::uniform_real_distribution<double> uni(lo, hi);
  Tensor t(std::move(shape));
  for (auto& v : t.data()) v = uni(rng);
  return t;
}

double ks_uniform(std::vector<double> xs, double lo, double hi) {
  std::sort(xs.begin(), xs.end());
  const double n = static_cast<double>(xs.size());
  double d = 0.0;
  for (std::size_t i = 0; i < xs.size(); ++i) {
    const double f = (xs[i] - lo) / (hi - lo);
    d = std::max({d, f - static_cast<double>(i) / n, static_cast<double>(i + 1) / n - f});
  }
  return d;
}

}  // namespace

TEST_CASE("axis-aligned integer placement is an exact copy") {
  Rng rng(1);
  const Tensor image = uniform({3, 10, 12}, rng, 0.0, 1.0);
  const Tensor patch = uniform({3, 4, 4}, rng, 0.0, 1.0);
  const Tensor out = apply_patch(patch, image, {6.0, 5.0, 0.0});
  for (std::size_t c = 0; c < 3; ++c) {
    for (std::size_t i = 0; i < 10; ++i) {
      for (std::size_t j = 0; j < 12; ++j) {
        const double v = out[(c * 10 + i) * 12 + j];
        const bool inside = i >= 3 && i < 7 && j >= 4 && j < 8;
        const double want = inside ? patch[(c * 4 + (i - 3)) * 4 + (j - 4)] : image[(c * 10 + i) * 12 + j];
        CHECK(v == want);
      }
    }
  }
}

TEST_CASE("half the patch outside the frame writes only in-bounds pixels") {
  const Tensor image(Shape{3, 8, 8}, 0.25);
  const Tensor patch(Shape{3, 4, 4}, 0.75);
  const Tensor out = apply_patch(patch, image, {0.0, 4.0, 0.0});
  std::size_t written = 0;
  for (std::size_t i = 0; i < out.size(); ++i) written += out[i] == 0.75 ? 1 : 0;
  CHECK(written == 3 * 4 * 2);
  const Tensor gone = apply_patch(patch, image, {-20.0, -20.0, 0.3});
  CHECK(gone.values() == image.values());
}

TEST_CASE("quarter turn matches a hand-rotated pixel map") {
  // Patch [[a b] [c d]] turned by +pi/2 (x right, y down) reads [[c a] [d b]].
  Tensor patch(Shape{1, 2, 2}, std::vector<double>{0.1, 0.2, 0.3, 0.4});
  const Tensor image(Shape{1, 4, 4}, 0.0);
  const Tensor out = apply_patch(patch, image, {2.0, 2.0, std::numbers::pi / 2.0});
  auto at = [&](std::size_t i, std::size_t j) { return out[i * 4 + j]; };
  CHECK(at(1, 1) == doctest::Approx(0.3).epsilon(1e-12));
  CHECK(at(1, 2) == doctest::Approx(0.1).epsilon(1e-12));
  CHECK(at(2, 1) == doctest::Approx(0.4).epsilon(1e-12));
  CHECK(at(2, 2) == doctest::Approx(0.2).epsilon(1e-12));
  double outside = 0.0;
  for (std::size_t i = 0; i < 4; ++i) {
    for (std::size_t j = 0; j < 4; ++j) {
      if (i < 1 || i > 2 || j < 1 || j > 2) outside += std::abs(at(i, j));
    }
  }
  CHECK(outside == 0.0);
}

TEST_CASE("pixels outside the rotated footprint are untouched") {
  Rng rng(2);
  for (int trial = 0; trial < 20; ++trial) {
    const Tensor image = uniform({3, 16, 16}, rng, 0.0, 1.0);
    const Tensor patch = uniform({3, 6, 6}, rng, 0.0, 1.0);
    const PlacementParams theta{std::uniform_real_distribution<double>(2.0, 14.0)(rng),
                                std::uniform_real_distribution<double>(2.0, 14.0)(rng),
                                std::uniform_real_distribution<double>(-3.0, 3.0)(rng)};
    const Tensor out = apply_patch(patch, image, theta);
    const auto mask = footprint_mask(6, 16, 16, theta);
    for (std::size_t c = 0; c < 3; ++c) {
      for (std::size_t p = 0; p < 256; ++p) {
        if (!mask[p]) REQUIRE(out[c * 256 + p] == image[c * 256 + p]);
        if (mask[p]) REQUIRE(out[c * 256 + p] >= 0.0);
      }
    }
  }
}

TEST_CASE("composite is clamped to [0,1]") {
  const Tensor image(Shape{3, 8, 8}, 0.5);
  const Tensor patch(Shape{3, 4, 4}, 1.7);
  const Tensor out = apply_patch(patch, image, {4.0, 4.0, 0.4});
  for (double v : out.values()) CHECK(v <= 1.0);
}

TEST_CASE("patch larger than the image is rejected") {
  CHECK_THROWS_AS(apply_patch(Tensor(Shape{3, 9, 9}), Tensor(Shape{3, 8, 16}), {4, 4, 0}), std::invalid_argument);
  CHECK_THROWS_AS(apply_patch(Tensor(Shape{1, 2, 2}), Tensor(Shape{3, 8, 8}), {4, 4, 0}), std::invalid_argument);
}

TEST_CASE("backward of an identity placement is the covered window") {
  Rng rng(3);
  const Tensor up = uniform({3, 8, 8}, rng, -1.0, 1.0);
  const Tensor grad = apply_patch_backward(up, {4.0, 4.0, 0.0}, 4);
  for (std::size_t c = 0; c < 3; ++c) {
    for (std::size_t i = 0; i < 4; ++i) {
      for (std::size_t j = 0; j < 4; ++j) CHECK(grad[(c * 4 + i) * 4 + j] == up[(c * 8 + i + 2) * 8 + j + 2]);
    }
  }
  const Tensor none = apply_patch_backward(up, {-30.0, 50.0, 1.0}, 4);
  for (double v : none.values()) CHECK(v == 0.0);
}

TEST_CASE("forward and backward are adjoint within 1e-10") {
  Rng rng(4);
  for (int trial = 0; trial < 100; ++trial) {
    const Tensor image(Shape{3, 20, 20}, 0.0);
    // Values well inside (0,1) keep the clamp inactive, so A is linear in p.
    const Tensor p = uniform({3, 8, 8}, rng, 0.05, 0.45);
    const Tensor u = uniform({3, 20, 20}, rng, -1.0, 1.0);
    const PlacementParams theta{std::uniform_real_distribution<double>(0.0, 20.0)(rng),
                                std::uniform_real_distribution<double>(0.0, 20.0)(rng),
                                std::uniform_real_distribution<double>(-4.0, 4.0)(rng)};
    const Tensor ap = apply_patch(p, image, theta);
    const auto mask = footprint_mask(8, 20, 20, theta);
    double lhs = 0.0;
    for (std::size_t c = 0; c < 3; ++c) {
      for (std::size_t k = 0; k < 400; ++k) {
        if (mask[k]) lhs += u[c * 400 + k] * ap[c * 400 + k];
      }
    }
    const Tensor bu = apply_patch_backward(u, theta, 8);
    double rhs = 0.0;
    for (std::size_t i = 0; i < p.size(); ++i) rhs += bu[i] * p[i];
    CHECK(std::abs(lhs - rhs) < 1e-10);
  }
}

TEST_CASE("taped placement passes finite differences") {
  Rng rng(5);
  for (int trial = 0; trial < 10; ++trial) {
    Tensor patch = uniform({3, 5, 5}, rng, 0.2, 0.8);
    patch.set_requires_grad(true);
    const Tensor image = uniform({3, 12, 12}, rng, 0.0, 1.0);
    const Tensor w = uniform({3, 12, 12}, rng, -1.0, 1.0);
    const PlacementParams theta{std::uniform_real_distribution<double>(3.0, 9.0)(rng),
                                std::uniform_real_distribution<double>(3.0, 9.0)(rng),
                                std::uniform_real_distribution<double>(-3.0, 3.0)(rng)};
    const auto report = grad_check(
        [&](Graph& g, const Tensor&) { return ops::dot(g, apply_patch(g, patch, image, theta), w); }, {1},
        {{"patch", patch}});
    INFO("max rel err " << report.max_rel_error);
    CHECK(report.passed);
  }
}

TEST_CASE("prior samples stay in bounds and are uniform") {
  const auto prior = PlacementPrior::for_patch(16, 64, 64);
  CHECK(prior.cx_lo == doctest::Approx(8.0 * std::numbers::sqrt2));
  CHECK(prior.cx_hi == doctest::Approx(64.0 - 8.0 * std::numbers::sqrt2));
  Rng rng(6);
  std::vector<double> xs, ys, ps;
  for (int i = 0; i < 10000; ++i) {
    const auto t = sample_theta(prior, rng);
    REQUIRE(prior.contains(t));
    xs.push_back(t.cx);
    ys.push_back(t.cy);
    ps.push_back(t.phi);
  }
  CHECK(ks_uniform(xs, prior.cx_lo, prior.cx_hi) < 0.02);
  CHECK(ks_uniform(ys, prior.cy_lo, prior.cy_hi) < 0.02);
  CHECK(ks_uniform(ps, prior.phi_lo, prior.phi_hi) < 0.02);

  Rng a(9), b(9);
  const auto ta = sample_theta(prior, a);
  const auto tb = sample_theta(prior, b);
  CHECK(ta.cx == tb.cx);
  CHECK(ta.cy == tb.cy);
  CHECK(ta.phi == tb.phi);
}

TEST_CASE("placed patches never leave the canvas under the prior") {
  const auto prior = PlacementPrior::for_patch(16, 64, 64);
  Rng rng(7);
  for (int i = 0; i < 200; ++i) {
    const auto t = sample_theta(prior, rng);
    const auto mask = footprint_mask(16, 64, 64, t);
    std::size_t covered = 0;
    for (auto m : mask) covered += m;
    // Inverse-mapped pixel centres approximate the square's area.
    CHECK(covered >= 240);
    CHECK(covered <= 272);
  }
}

TEST_CASE("audio placement adds, truncates and clamps") {
  const Tensor host(Shape{1, 16}, 0.2);
  const Tensor snippet(Shape{1, 4}, 0.5);
  SUBCASE("zero gain leaves the host bit-identical") {
    Tensor x = host;
    for (int i = 0; i < 5; ++i) x = apply_audio(snippet, x, {3, 0.0});
    CHECK(x.values() == host.values());
  }
  SUBCASE("last offset changes exactly one sample") {
    const Tensor out = apply_audio(snippet, host, {15, 1.0});
    std::size_t changed = 0;
    for (std::size_t i = 0; i < 16; ++i) changed += out[i] != host[i] ? 1 : 0;
    CHECK(changed == 1);
    CHECK(out[15] == doctest::Approx(0.7));
  }
  SUBCASE("overlap is clamped") {
    const Tensor loud(Shape{1, 16}, 0.9);
    const Tensor out = apply_audio(snippet, loud, {2, 1.0});
    for (std::size_t i = 2; i < 6; ++i) CHECK(out[i] == 1.0);
    CHECK(out[1] == 0.9);
  }
  SUBCASE("offset past the host is rejected") {
    CHECK_THROWS_AS(apply_audio(snippet, host, {16, 0.5}), std::out_of_range);
    CHECK_THROWS_AS(apply_audio(Tensor(Shape{1, 20}), host, {0, 0.5}), std::invalid_argument);
  }
}

TEST_CASE("taped audio placement passes finite differences") {
  Rng rng(8);
  Tensor snippet = uniform({1, 6}, rng, -0.3, 0.3);
  snippet.set_requires_grad(true);
  const Tensor host = uniform({1, 12}, rng, -0.4, 0.4);
  const Tensor w = uniform({1, 12}, rng, -1.0, 1.0);
  const auto report = grad_check(
      [&](Graph& g, const Tensor&) { return ops::dot(g, apply_audio(g, snippet, host, {8, 0.7}), w); }, {1},
      {{"snippet", snippet}});
  CHECK(report.passed);
}
