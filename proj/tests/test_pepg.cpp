#include <doctest.h>

#include <cmath>
#include <functional>
#include <numbers>

#include "madv/io.hpp"
#include "madv/pepg.hpp"

using namespace madv;
using namespace madv::pepg;

namespace {

PepgState free_state(std::vector<double> mu, std::vector<double> sigma, double beta_scale = 0.05) {
  const std::size_t n = mu.size();
  return make_state(std::move(mu), std::move(sigma), std::vector<double>(n, -1000.0), std::vector<double>(n, 1000.0),
                    std::vector<bool>(n, false), beta_scale);
}

double distance(const std::vector<double>& a, const std::vector<double>& b) {
  double s = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) s += (a[i] - b[i]) * (a[i] - b[i]);
  return std::sqrt(s);
}

RewardBatch evaluate(const SampleBatch& batch, const std::function<double(const std::vector<double>&)>& reward) {
  RewardBatch rb{batch.epsilons, {}};
  for (const auto& t : batch.thetas) rb.rewards.push_back(reward(t));
  return rb;
}

}  // namespace

TEST_CASE("quadratic reward converges to the optimum on every seed") {
  const std::vector<double> target{10.0, 20.0, 0.0};
  auto reward = [&](const std::vector<double>& t) { return -std::pow(distance(t, target), 2); };
  for (std::uint64_t seed = 0; seed < 5; ++seed) {
    PepgState s = free_state({0.0, 0.0, 0.0}, {8.0, 8.0, 8.0}, 0.2);
    Rng rng(seed);
    std::size_t updates = 0;
    for (; updates < 500 && distance(pepg_best(s), target) >= 0.5; ++updates) {
      s = pepg_update(s, evaluate(pepg_sample(s, 16, rng), reward));
    }
    INFO("seed " << seed << " distance " << distance(pepg_best(s), target));
    CHECK(distance(pepg_best(s), target) < 0.5);
    CHECK(updates <= 500);
  }
}

TEST_CASE("samples come in mirrored pairs") {
  PepgState s = free_state({1.0, -2.0, 3.5}, {0.5, 2.0, 1.0});
  Rng rng(3);
  const auto batch = pepg_sample(s, 8, rng);
  REQUIRE(batch.thetas.size() == 8);
  REQUIRE(batch.epsilons.size() == 4);
  for (std::size_t i = 0; i < 4; ++i) {
    for (std::size_t j = 0; j < 3; ++j) {
      CHECK((batch.thetas[2 * i][j] + batch.thetas[2 * i + 1][j]) / 2.0 == doctest::Approx(s.mu[j]).epsilon(1e-14));
      CHECK(batch.thetas[2 * i][j] == s.mu[j] + batch.epsilons[i][j]);
    }
  }
  CHECK_THROWS_AS(pepg_sample(s, 7, rng), std::invalid_argument);
  CHECK_THROWS_AS(pepg_sample(s, 0, rng), std::invalid_argument);
}

TEST_CASE("sample variance matches sigma squared") {
  PepgState s = free_state({0.0, 5.0}, {0.7, 3.0});
  Rng rng(4);
  std::vector<double> sum(2, 0.0), sq(2, 0.0);
  const std::size_t n = 10000;
  for (std::size_t k = 0; k < n / 2; ++k) {
    for (const auto& t : pepg_sample(s, 2, rng).thetas) {
      for (std::size_t j = 0; j < 2; ++j) {
        sum[j] += t[j];
        sq[j] += t[j] * t[j];
      }
    }
  }
  for (std::size_t j = 0; j < 2; ++j) {
    const double mean = sum[j] / n;
    const double var = sq[j] / n - mean * mean;
    CHECK(std::abs(var / (s.sigma[j] * s.sigma[j]) - 1.0) < 0.1);
  }
}

TEST_CASE("sigma at the floor gives samples near mu") {
  PepgState s = free_state({2.0}, {1e-9});
  s.sigma_min = 1e-12;
  s.sigma = {1e-12};
  Rng rng(5);
  for (const auto& t : pepg_sample(s, 10, rng).thetas) CHECK(t[0] == doctest::Approx(2.0).epsilon(1e-9));
}

TEST_CASE("equal rewards leave the state unchanged") {
  PepgState s = free_state({1.0, 2.0}, {0.5, 0.5});
  Rng rng(6);
  const auto batch = pepg_sample(s, 6, rng);
  const PepgState t = pepg_update(s, RewardBatch{batch.epsilons, std::vector<double>(6, -3.0)});
  CHECK(t.mu == s.mu);
  CHECK(t.sigma == s.sigma);
}

TEST_CASE("better positive sample moves mu up") {
  PepgState s = free_state({0.0}, {1.0});
  const PepgState t = pepg_update(s, RewardBatch{{{0.4}}, {1.0, 0.0}});
  CHECK(t.mu[0] > s.mu[0]);
}

TEST_CASE("affine reward transforms give the identical update") {
  PepgState s = free_state({3.0, -1.0, 0.5}, {1.0, 2.0, 0.3});
  Rng rng(7);
  std::normal_distribution<double> normal;
  for (int trial = 0; trial < 20; ++trial) {
    const auto batch = pepg_sample(s, 12, rng);
    RewardBatch a{batch.epsilons, {}}, b{batch.epsilons, {}};
    for (std::size_t i = 0; i < 12; ++i) {
      const double r = normal(rng);
      a.rewards.push_back(r);
      b.rewards.push_back(4.5 * r - 17.0);
    }
    const auto ua = pepg_update(s, a);
    const auto ub = pepg_update(s, b);
    for (std::size_t j = 0; j < 3; ++j) {
      CHECK(ua.mu[j] == doctest::Approx(ub.mu[j]).epsilon(1e-7));
      CHECK(ua.sigma[j] == doctest::Approx(ub.sigma[j]).epsilon(1e-7));
      CHECK(std::signbit(ua.mu[j] - s.mu[j]) == std::signbit(ub.mu[j] - s.mu[j]));
    }
  }
}

TEST_CASE("expected mu update is zero under theta-independent rewards") {
  PepgState s = free_state({0.0, 0.0}, {1.0, 1.0});
  Rng rng(8), noise_rng(9);
  std::normal_distribution<double> normal;
  const std::size_t batches = 1000;
  std::vector<double> sum(2, 0.0), sq(2, 0.0);
  for (std::size_t k = 0; k < batches; ++k) {
    const auto batch = pepg_sample(s, 16, rng);
    RewardBatch rb{batch.epsilons, {}};
    for (std::size_t i = 0; i < 16; ++i) rb.rewards.push_back(normal(noise_rng));
    const auto t = pepg_update(s, rb);
    for (std::size_t j = 0; j < 2; ++j) {
      const double d = t.mu[j] - s.mu[j];
      sum[j] += d;
      sq[j] += d * d;
    }
  }
  for (std::size_t j = 0; j < 2; ++j) {
    const double mean = sum[j] / batches;
    const double se = std::sqrt((sq[j] / batches - mean * mean) / batches);
    CHECK(std::abs(mean) < 3.0 * se);
  }
}

TEST_CASE("sigma never drops below the floor and mu stays in its box") {
  PepgState s = make_state({0.5, 0.0}, {0.3, 1.0}, {0.0, -std::numbers::pi}, {1.0, std::numbers::pi},
                           {false, true}, 2.0, 2.0, 0.05);
  Rng rng(10);
  std::uniform_real_distribution<double> wild(-1e6, 1e6);
  for (int k = 0; k < 500; ++k) {
    const auto batch = pepg_sample(s, 4, rng);
    RewardBatch rb{batch.epsilons, {}};
    for (int i = 0; i < 4; ++i) rb.rewards.push_back(wild(rng));
    s = pepg_update(s, rb);
    for (std::size_t j = 0; j < 2; ++j) REQUIRE(s.sigma[j] >= 0.05);
    REQUIRE(s.mu[0] >= 0.0);
    REQUIRE(s.mu[0] <= 1.0);
    REQUIRE(s.mu[1] >= -std::numbers::pi);
    REQUIRE(s.mu[1] < std::numbers::pi);
  }
}

TEST_CASE("non-finite rewards and mismatched pairs are rejected") {
  PepgState s = free_state({0.0}, {1.0});
  CHECK_THROWS_AS(pepg_update(s, RewardBatch{{{0.1}}, {1.0, NAN}}), std::invalid_argument);
  CHECK_THROWS_AS(pepg_update(s, RewardBatch{{{0.1}}, {1.0}}), std::invalid_argument);
  CHECK_THROWS_AS(pepg_update(s, RewardBatch{{{0.1, 0.2}}, {1.0, 0.0}}), std::invalid_argument);
}

TEST_CASE("default placement state") {
  const auto s = placement_state(16, 64, 64);
  CHECK(s.mu == std::vector<double>{32.0, 32.0, 0.0});
  CHECK(s.sigma[0] == 16.0);
  CHECK(s.sigma[2] == doctest::Approx(std::numbers::pi / 2.0));
  CHECK(s.beta_mu[0] == doctest::Approx(0.8));
  CHECK(s.beta_sigma[0] == doctest::Approx(0.4));
  CHECK(s.periodic[2]);
  CHECK(pepg_best(s) == s.mu);
}

TEST_CASE("state survives a checkpoint round trip") {
  PepgState s = placement_state(16, 64, 64);
  Rng rng(11);
  for (int k = 0; k < 5; ++k) {
    const auto batch = pepg_sample(s, 8, rng);
    RewardBatch rb{batch.epsilons, {}};
    for (const auto& t : batch.thetas) rb.rewards.push_back(-t[0]);
    s = pepg_update(s, rb);
  }
  const auto stored = io::decode_checkpoint(io::encode_checkpoint(state_tensors(s)));
  const auto back = state_from_tensors(stored);
  const auto stored_again = io::encode_checkpoint(state_tensors(back));
  CHECK(stored_again == io::encode_checkpoint(state_tensors(s)));
  for (std::size_t j = 0; j < 3; ++j) {
    CHECK(back.mu[j] == static_cast<double>(static_cast<float>(s.mu[j])));
    CHECK(pepg_best(back)[j] == doctest::Approx(pepg_best(s)[j]).epsilon(1e-6));
  }
  CHECK(back.periodic == s.periodic);
  CHECK_THROWS(state_from_tensors({}));
}
