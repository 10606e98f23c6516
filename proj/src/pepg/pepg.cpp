#include "madv/pepg.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <stdexcept>
#include <string>

#include "madv/overlay.hpp"

namespace madv::pepg {

void PepgState::validate() const {
  const std::size_t n = mu.size();
  if (n == 0) throw std::invalid_argument("pepg state has no dimensions");
  if (sigma.size() != n || beta_mu.size() != n || beta_sigma.size() != n || lower.size() != n ||
      upper.size() != n || periodic.size() != n) {
    throw std::invalid_argument("pepg state vectors disagree in length");
  }
  if (!sigma_max.empty() && sigma_max.size() != n) throw std::invalid_argument("pepg sigma cap has wrong length");
  if (!(sigma_min > 0.0)) throw std::invalid_argument("pepg sigma floor must be positive");
  for (std::size_t j = 0; j < n; ++j) {
    if (!(sigma[j] >= sigma_min)) {
      throw std::invalid_argument("pepg sigma[" + std::to_string(j) + "] below floor");
    }
    if (!(lower[j] <= upper[j])) throw std::invalid_argument("pepg bounds inverted");
    if (!sigma_max.empty() && !(sigma_max[j] >= sigma_min)) {
      throw std::invalid_argument("pepg sigma cap below floor");
    }
  }
}

PepgState make_state(std::vector<double> mu_init, std::vector<double> sigma_init, std::vector<double> lower,
                     std::vector<double> upper, std::vector<bool> periodic, double beta_scale,
                     double beta_sigma_ratio, double sigma_min) {
  PepgState s;
  s.mu = std::move(mu_init);
  s.sigma = std::move(sigma_init);
  s.lower = std::move(lower);
  s.upper = std::move(upper);
  s.periodic = std::move(periodic);
  s.sigma_min = sigma_min;
  for (double sg : s.sigma) {
    s.beta_mu.push_back(beta_scale * sg);
    s.beta_sigma.push_back(beta_sigma_ratio * beta_scale * sg);
  }
  for (auto& sg : s.sigma) sg = std::max(sg, sigma_min);
  s.validate();
  return s;
}

PepgState placement_state(std::size_t side, std::size_t height, std::size_t width, double beta_scale,
                          double beta_sigma_ratio, double sigma_min) {
  const auto prior = overlay::PlacementPrior::for_patch(side, height, width);
  const double w = static_cast<double>(width);
  const double h = static_cast<double>(height);
  PepgState s = make_state({w / 2.0, h / 2.0, 0.0}, {w / 4.0, h / 4.0, std::numbers::pi / 2.0},
                           {prior.cx_lo, prior.cy_lo, -std::numbers::pi}, {prior.cx_hi, prior.cy_hi, std::numbers::pi},
                           {false, false, true}, beta_scale, beta_sigma_ratio, sigma_min);
  s.sigma_max = {w / 2.0, h / 2.0, std::numbers::pi};
  s.validate();
  return s;
}

SampleBatch pepg_sample(const PepgState& state, std::size_t m, Rng& rng) {
  if (m < 2 || m % 2 != 0) {
    throw std::invalid_argument("pepg_sample needs an even batch size >= 2, got " + std::to_string(m));
  }
  std::normal_distribution<double> normal(0.0, 1.0);
  SampleBatch batch;
  const std::size_t n = state.dims();
  for (std::size_t i = 0; i < m / 2; ++i) {
    std::vector<double> eps(n), plus(n), minus(n);
    for (std::size_t j = 0; j < n; ++j) {
      eps[j] = state.sigma[j] * normal(rng);
      plus[j] = state.mu[j] + eps[j];
      minus[j] = state.mu[j] - eps[j];
    }
    batch.epsilons.push_back(std::move(eps));
    batch.thetas.push_back(std::move(plus));
    batch.thetas.push_back(std::move(minus));
  }
  return batch;
}

std::vector<double> normalize_rewards(std::span<const double> rewards) {
  const double n = static_cast<double>(rewards.size());
  double mean = 0.0;
  for (double r : rewards) mean += r;
  mean /= n;
  double var = 0.0;
  for (double r : rewards) var += (r - mean) * (r - mean);
  const double sd = std::sqrt(var / n);
  std::vector<double> out;
  out.reserve(rewards.size());
  for (double r : rewards) out.push_back((r - mean) / (sd + 1e-8));
  return out;
}

PepgState pepg_update(PepgState state, const RewardBatch& batch) {
  const std::size_t pairs = batch.epsilons.size();
  const std::size_t n = state.dims();
  if (pairs == 0 || batch.rewards.size() != 2 * pairs) {
    throw std::invalid_argument("pepg_update: rewards must hold one pair per epsilon");
  }
  for (const auto& eps : batch.epsilons) {
    if (eps.size() != n) throw std::invalid_argument("pepg_update: epsilon dimension does not match state");
  }
  for (double r : batch.rewards) {
    if (!std::isfinite(r)) throw std::invalid_argument("pepg_update: non-finite reward");
  }

  const auto norm = normalize_rewards(batch.rewards);
  double baseline = 0.0;
  for (double r : norm) baseline += r;
  baseline /= static_cast<double>(norm.size());

  std::vector<double> dmu(n, 0.0), dsigma(n, 0.0);
  for (std::size_t i = 0; i < pairs; ++i) {
    const double rp = norm[2 * i];
    const double rm = norm[2 * i + 1];
    const double diff = (rp - rm) / 2.0;
    const double adv = (rp + rm) / 2.0 - baseline;
    for (std::size_t j = 0; j < n; ++j) {
      const double e = batch.epsilons[i][j];
      const double sg = state.sigma[j];
      dmu[j] += diff * e;
      dsigma[j] += adv * (e * e - sg * sg) / sg;
    }
  }
  const double p = static_cast<double>(pairs);
  for (std::size_t j = 0; j < n; ++j) {
    double mu = state.mu[j] + state.beta_mu[j] * dmu[j] / p;
    if (state.periodic[j]) {
      const double span = state.upper[j] - state.lower[j];
      mu = state.lower[j] + std::fmod(std::fmod(mu - state.lower[j], span) + span, span);
      if (mu >= state.upper[j]) mu = state.lower[j];
    } else {
      mu = std::clamp(mu, state.lower[j], state.upper[j]);
    }
    state.mu[j] = mu;
    double sg = std::max(state.sigma_min, state.sigma[j] + state.beta_sigma[j] * dsigma[j] / p);
    if (!state.sigma_max.empty()) sg = std::min(sg, state.sigma_max[j]);
    state.sigma[j] = sg;
  }
  return state;
}

std::vector<double> pepg_best(const PepgState& state) { return state.mu; }

namespace {

Tensor vec_tensor(const std::vector<double>& v) { return Tensor(Shape{std::max<std::size_t>(v.size(), 1)}, v.empty() ? std::vector<double>{0.0} : v); }

}  // namespace

std::vector<NamedTensor> state_tensors(const PepgState& state, const std::string& prefix) {
  std::vector<double> periodic;
  for (bool b : state.periodic) periodic.push_back(b ? 1.0 : 0.0);
  std::vector<NamedTensor> out = {
      {prefix + "mu", vec_tensor(state.mu)},
      {prefix + "sigma", vec_tensor(state.sigma)},
      {prefix + "beta_mu", vec_tensor(state.beta_mu)},
      {prefix + "beta_sigma", vec_tensor(state.beta_sigma)},
      {prefix + "lower", vec_tensor(state.lower)},
      {prefix + "upper", vec_tensor(state.upper)},
      {prefix + "periodic", vec_tensor(periodic)},
      {prefix + "sigma_min", Tensor(Shape{1}, state.sigma_min)},
  };
  if (!state.sigma_max.empty()) out.push_back({prefix + "sigma_max", vec_tensor(state.sigma_max)});
  return out;
}

PepgState state_from_tensors(const std::vector<NamedTensor>& tensors, const std::string& prefix) {
  auto find = [&](const std::string& name, bool required) -> const Tensor* {
    for (const auto& t : tensors) {
      if (t.name == prefix + name) return &t.tensor;
    }
    if (required) throw std::invalid_argument("checkpoint lacks " + prefix + name);
    return nullptr;
  };
  PepgState s;
  s.mu = find("mu", true)->values();
  s.sigma = find("sigma", true)->values();
  s.beta_mu = find("beta_mu", true)->values();
  s.beta_sigma = find("beta_sigma", true)->values();
  s.lower = find("lower", true)->values();
  s.upper = find("upper", true)->values();
  for (double v : find("periodic", true)->values()) s.periodic.push_back(v != 0.0);
  s.sigma_min = find("sigma_min", true)->item();
  if (const Tensor* cap = find("sigma_max", false)) s.sigma_max = cap->values();
  s.validate();
  return s;
}

}  // namespace madv::pepg
