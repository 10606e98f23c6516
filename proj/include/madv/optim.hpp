#pragma once

#include <cstddef>
#include <vector>

#include "madv/tensor.hpp"

namespace madv {

struct AdamOptions {
  double lr = 1e-3;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;
};

/// Adam with bias correction. Moment buffers are bound to the parameter list
/// given at construction.
class AdamState {
 public:
  AdamState(std::vector<Tensor> params, AdamOptions options = {});

  /// Applies one update from the current grad buffers. Throws if a parameter
  /// has no gradient populated.
  void step();
  /// Zeroes every parameter's grad buffer.
  void zero_grad();

  std::size_t steps() const { return steps_; }
  const AdamOptions& options() const { return options_; }
  void set_lr(double lr) { options_.lr = lr; }
  const std::vector<double>& first_moment(std::size_t i) const { return m_.at(i); }
  const std::vector<double>& second_moment(std::size_t i) const { return v_.at(i); }

 private:
  std::vector<Tensor> params_;
  std::vector<std::vector<double>> m_;
  std::vector<std::vector<double>> v_;
  AdamOptions options_;
  std::size_t steps_ = 0;
};

/// Functional form: one Adam step on `state`'s parameters.
void adam_step(AdamState& state);

void zero_grads(std::vector<Tensor>& params);

}  // namespace madv
