#pragma once

#include <cstddef>
#include <span>
#include <string>
#include <vector>

#include "madv/rng.hpp"
#include "madv/tensor.hpp"

namespace madv::pepg {

/// Diagonal Gaussian over placement parameters, plus its update rule
/// constants. Periodic dimensions wrap into [lower, upper) instead of being
/// clamped.
struct PepgState {
  std::vector<double> mu;
  std::vector<double> sigma;
  std::vector<double> beta_mu;
  std::vector<double> beta_sigma;
  std::vector<double> lower;
  std::vector<double> upper;
  std::vector<bool> periodic;
  double sigma_min = 0.05;
  /// Optional per-dimension ceiling on sigma; empty means uncapped.
  std::vector<double> sigma_max;

  std::size_t dims() const { return mu.size(); }
  /// Throws unless all per-dimension vectors agree and sigma >= sigma_min > 0.
  void validate() const;
};

/// Builds a state from initial (mu, sigma) with beta_mu = beta_scale * sigma
/// and beta_sigma = beta_sigma_ratio * beta_mu.
PepgState make_state(std::vector<double> mu_init, std::vector<double> sigma_init, std::vector<double> lower,
                     std::vector<double> upper, std::vector<bool> periodic, double beta_scale = 0.05,
                     double beta_sigma_ratio = 0.5, double sigma_min = 0.05);

/// Default placement state for a side x side patch on a height x width image:
/// mu at the image centre with phi = 0, sigma = (W/4, H/4, pi/2), mean
/// bounded by the placement prior box, phi wrapped to [-pi, pi), sigma
/// capped at (W/2, H/2, pi).
PepgState placement_state(std::size_t side, std::size_t height, std::size_t width, double beta_scale = 0.05,
                          double beta_sigma_ratio = 0.5, double sigma_min = 0.05);

/// Symmetric samples: thetas[2i] = mu + eps_i, thetas[2i+1] = mu - eps_i.
struct SampleBatch {
  std::vector<std::vector<double>> epsilons;
  std::vector<std::vector<double>> thetas;
};

/// rewards[2i] belongs to mu + epsilons[i], rewards[2i+1] to mu - epsilons[i].
struct RewardBatch {
  std::vector<std::vector<double>> epsilons;
  std::vector<double> rewards;
};

SampleBatch pepg_sample(const PepgState& state, std::size_t m, Rng& rng);

/// Per-batch standardisation (r - mean) / (std + 1e-8).
std::vector<double> normalize_rewards(std::span<const double> rewards);

/// One symmetric-sampling update of (mu, sigma) from a reward batch, with
/// the batch mean of the normalised rewards as baseline.
PepgState pepg_update(PepgState state, const RewardBatch& batch);

/// Mode of the current distribution.
std::vector<double> pepg_best(const PepgState& state);

/// Named tensors "<prefix>mu", "<prefix>sigma", ... for checkpoints.
std::vector<NamedTensor> state_tensors(const PepgState& state, const std::string& prefix = "pepg.");
/// Inverse of state_tensors; throws when an entry is missing.
PepgState state_from_tensors(const std::vector<NamedTensor>& tensors, const std::string& prefix = "pepg.");

}  // namespace madv::pepg
