#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <numbers>

#include "madv/evalkit.hpp"
#include "madv/ops.hpp"
#include "madv/overlay.hpp"

using namespace madv;
using namespace madv::evalkit;

namespace {

constexpr std::size_t kSide = 64;
const std::vector<double> kLogits{0.3, 1.2, -0.4};

// Predicts class 1 when the bright pixels sit left of `threshold`, else 0.
LogitsFn centroid_classifier(double threshold) {
  return [threshold](const Tensor& x) {
    double sx = 0.0, n = 0.0;
    const std::size_t h = x.dim(1), w = x.dim(2);
    for (std::size_t i = 0; i < h; ++i) {
      for (std::size_t j = 0; j < w; ++j) {
        if (x[i * w + j] > 0.5) {
          sx += static_cast<double>(j) + 0.5;
          n += 1.0;
        }
      }
    }
    const bool left = n > 0.0 && sx / n < threshold;
    return std::vector<double>{left ? 0.0 : 5.0, left ? 5.0 : 0.0};
  };
}

LogitsFn constant_classifier() {
  return [](const Tensor&) { return kLogits; };
}

HeatmapOptions grid(std::size_t stride, bool sweep = false) {
  HeatmapOptions o;
  o.stride = stride;
  o.sweep_rotations = sweep;
  return o;
}

RunSummary run(const std::string& method, std::size_t size, std::uint64_t seed, bool ok, std::size_t iters) {
  return {method, size, seed, ok, iters};
}

}  // namespace

TEST_CASE("relocation rate matches the analytic area of a location-keyed classifier") {
  // Class 1 exactly when the patch covers pixel (32, 32). Whatever the angle,
  // the covering centres form a rotated s x s square around that pixel, which
  // lies inside the prior box, so the rate is s^2 over the box area.
  const LogitsFn keyed = [](const Tensor& x) {
    const bool hit = x[32 * kSide + 32] > 0.0;
    return std::vector<double>{hit ? 0.0 : 5.0, hit ? 5.0 : 0.0};
  };
  const Tensor base(Shape{3, kSide, kSide}, 0.0);
  const Tensor patch(Shape{3, 16, 16}, 1.0);
  const auto prior = overlay::PlacementPrior::for_patch(16, kSide, kSide);
  const double expected = 256.0 / ((prior.cx_hi - prior.cx_lo) * (prior.cy_hi - prior.cy_lo));
  Rng rng(3);
  const std::size_t n = 10000;
  const auto rep = relocation_test(keyed, {{patch, base, 1, "toy"}}, n, rng);
  const double se = std::sqrt(expected * (1.0 - expected) / static_cast<double>(n));
  INFO("observed " << rep.rate << " expected " << expected);
  CHECK(std::abs(rep.rate - expected) < 3.0 * se);
  CHECK(rep.successes.size() == 1);
  CHECK(rep.trials_per_record == n);
  REQUIRE(rep.group("toy") != nullptr);
  CHECK(rep.group("toy")->trials == n);
  CHECK(rep.group("none") == nullptr);
}

TEST_CASE("relocation groups are tallied separately") {
  const Tensor base(Shape{3, kSide, kSide}, 0.0);
  const Tensor patch(Shape{3, 8, 8}, 1.0);
  Rng rng(4);
  // Threshold beyond the image: every placement is "left", so target 1 always hits and target 0 never does.
  const auto rep = relocation_test(centroid_classifier(1000.0),
                                   {{patch, base, 1, "a"}, {patch, base, 0, "b"}, {patch, base, 1, "a"}}, 50, rng);
  CHECK(rep.group("a")->records == 2);
  CHECK(rep.group("a")->rate == 1.0);
  CHECK(rep.group("b")->rate == 0.0);
  CHECK(rep.rate == doctest::Approx(2.0 / 3.0));
  CHECK(rep.groups.front().name == "a");
  CHECK_THROWS_AS(relocation_test(centroid_classifier(1.0), {}, 5, rng), std::invalid_argument);
  CHECK_THROWS_AS(relocation_test(centroid_classifier(1.0), {{patch, base, 1, "a"}}, 0, rng), std::invalid_argument);
}

TEST_CASE("constant classifier gives a constant heatmap") {
  const Tensor base(Shape{3, kSide, kSide}, 0.2);
  const Tensor patch(Shape{3, 16, 16}, 0.9);
  const auto map = confidence_heatmap(constant_classifier(), base, patch, 1, grid(4));
  const double expected = softmax(kLogits)[1];
  for (double v : map.values) CHECK(v == doctest::Approx(expected));
  CHECK(map.percentile_rank(expected) == 1.0);
}

TEST_CASE("heatmap grid dimensions follow floor(count / stride)") {
  const Tensor base(Shape{3, kSide, kSide}, 0.0);
  for (std::size_t side : {8u, 16u, 24u}) {
    const auto prior = overlay::PlacementPrior::for_patch(side, kSide, kSide);
    const std::size_t count_x = static_cast<std::size_t>(std::floor(prior.cx_hi) - std::ceil(prior.cx_lo)) + 1;
    const std::size_t count_y = static_cast<std::size_t>(std::floor(prior.cy_hi) - std::ceil(prior.cy_lo)) + 1;
    for (std::size_t stride : {1u, 3u, 8u}) {
      const auto map =
          confidence_heatmap(constant_classifier(), base, Tensor(Shape{3, side, side}, 1.0), 0, grid(stride));
      CHECK(map.cols == count_x / stride);
      CHECK(map.rows == count_y / stride);
      CHECK(map.values.size() == map.rows * map.cols);
      CHECK(map.x0 == std::ceil(prior.cx_lo));
    }
  }
  CHECK_THROWS_AS(confidence_heatmap(constant_classifier(), base, Tensor(Shape{3, 8, 8}, 1.0), 0, grid(0)),
                  std::invalid_argument);
  CHECK_THROWS_AS(confidence_heatmap(constant_classifier(), base, Tensor(Shape{3, 8, 8}, 1.0), 0, grid(1000)),
                  std::invalid_argument);
}

TEST_CASE("heatmap cells index the placement centre") {
  const Tensor base(Shape{3, kSide, kSide}, 0.0);
  const Tensor patch(Shape{3, 8, 8}, 1.0);
  const auto map = confidence_heatmap(centroid_classifier(30.0), base, patch, 1, grid(2));
  for (std::size_t r = 0; r < map.rows; ++r) {
    for (std::size_t c = 0; c < map.cols; ++c) {
      const double cx = map.x0 + static_cast<double>(c * 2);
      const bool left = cx < 30.0;
      CHECK((map.at(r, c) > 0.5) == left);
    }
  }
  const auto [r, c] = map.cell_of(map.x0 + 4.2, map.y0 + 5.9);
  CHECK(r == 3);
  CHECK(c == 2);
  CHECK(map.cell_of(-100.0, 1e6).first == map.rows - 1);
  CHECK(map.cell_of(-100.0, 1e6).second == 0);
  CHECK(map.to_tensor().shape() == Shape{map.rows, map.cols});
  CHECK(heatmap_csv(map).find('\n') != std::string::npos);
}

TEST_CASE("rotation sweep takes the best angle") {
  const Tensor base(Shape{3, kSide, kSide}, 0.0);
  Tensor bar(Shape{3, 16, 16}, 0.0);
  for (std::size_t c = 0; c < 3; ++c) {
    for (std::size_t i = 0; i < 16; ++i) {
      for (std::size_t j = 0; j < 4; ++j) bar[(c * 16 + i) * 16 + j] = 1.0;
    }
  }
  const double threshold = 33.0;
  const auto fixed = confidence_heatmap(centroid_classifier(threshold), base, bar, 1, grid(4));
  const auto swept =
      confidence_heatmap(centroid_classifier(threshold), base, bar, 1, grid(4, true));
  for (std::size_t k = 0; k < fixed.values.size(); ++k) CHECK(swept.values[k] >= fixed.values[k]);
}

TEST_CASE("cam overlap") {
  Tensor cam(Shape{4, 4}, 0.0);
  std::vector<std::uint8_t> mask(16, 0);
  CHECK(cam_overlap(cam, mask) == 0.0);
  for (std::size_t i = 0; i < 16; ++i) cam[i] = static_cast<double>(i % 5) / 4.0;
  std::vector<std::uint8_t> all(16, 1);
  CHECK(cam_overlap(cam, all) == doctest::Approx(1.0));
  CHECK(cam_overlap(cam, mask) == 0.0);
  double last = 0.0;
  for (std::size_t k = 0; k < 16; ++k) {
    mask[k] = 1;
    const double v = cam_overlap(cam, mask);
    CHECK(v >= last);
    last = v;
  }
  CHECK(last == doctest::Approx(1.0));
  CHECK_THROWS_AS(cam_overlap(cam, std::vector<std::uint8_t>(15, 1)), std::invalid_argument);
}

TEST_CASE("aggregate table") {
  std::vector<RunSummary> runs;
  for (std::uint64_t seed = 0; seed < 3; ++seed) {
    runs.push_back(run("pepg", 16, seed, true, 10 + seed));
    runs.push_back(run("patch", 16, seed, seed == 0, 100));
    runs.push_back(run("pepg", 8, seed, false, 500));
    runs.push_back(run("patch", 8, seed, false, 500));
  }
  const auto t = aggregate_report(runs);
  REQUIRE(t.rows.size() == 4);
  const auto* p16 = t.find("pepg", 16);
  REQUIRE(p16 != nullptr);
  CHECK(p16->runs == 3);
  CHECK(p16->successes == 3);
  CHECK(*p16->mean_iterations == doctest::Approx(11.0));
  CHECK(t.find("patch", 16)->success_rate == doctest::Approx(1.0 / 3.0));
  CHECK(*t.find("patch", 16)->mean_iterations == 100.0);
  CHECK_FALSE(t.find("pepg", 8)->mean_iterations.has_value());
  CHECK(t.csv.find("pepg,8,3,0,0,NA") != std::string::npos);
  CHECK(t.find("pepg", 24) == nullptr);

  SUBCASE("input order does not matter") {
    std::vector<RunSummary> shuffled(runs.rbegin(), runs.rend());
    std::rotate(shuffled.begin(), shuffled.begin() + 5, shuffled.end());
    const auto u = aggregate_report(shuffled);
    CHECK(u.csv == t.csv);
    CHECK(u.text == t.text);
  }
  SUBCASE("missing cell") {
    auto bad = runs;
    bad.push_back(run("pepg", 24, 0, true, 3));
    CHECK_THROWS_AS(aggregate_report(bad), std::invalid_argument);
  }
  SUBCASE("duplicate run") {
    auto bad = runs;
    bad.push_back(runs[0]);
    CHECK_THROWS_AS(aggregate_report(bad), std::invalid_argument);
  }
  SUBCASE("mismatched seed sets") {
    auto bad = runs;
    bad.push_back(run("pepg", 16, 9, true, 3));
    CHECK_THROWS_AS(aggregate_report(bad), std::invalid_argument);
  }
  CHECK_THROWS_AS(aggregate_report({}), std::invalid_argument);
}

TEST_CASE("summaries carry success and iterations through") {
  attack::AttackReport rep;
  rep.success = true;
  rep.iterations = 42;
  const auto s = summarize(rep, "pepg", 16, 7);
  CHECK(s.success);
  CHECK(s.iterations == 42);
  CHECK(s.seed == 7);
  CHECK(target_confidence(constant_classifier(), Tensor(Shape{1}), 1) == doctest::Approx(softmax(kLogits)[1]));
  CHECK_THROWS_AS(target_confidence(constant_classifier(), Tensor(Shape{1}), 3), std::out_of_range);
}
