#pragma once

#include <cstdint>
#include <functional>
#include <string>
#include <vector>

#include "madv/graph.hpp"
#include "madv/tensor.hpp"

namespace madv {

struct GradCheckOptions {
  double step = 1e-5;
  double tolerance = 1e-4;
  /// Denominator floor for the relative error, so exact zeros compare sanely.
  double floor = 1e-6;
  /// Also check d loss / d input.
  bool check_input = false;
  std::uint64_t seed = 0;
};

struct GradCheckFailure {
  std::string tensor;
  std::size_t index = 0;
  double analytic = 0.0;
  double numeric = 0.0;
  double rel_error = 0.0;
};

struct GradCheckReport {
  bool passed = true;
  std::size_t checked = 0;
  double max_rel_error = 0.0;
  std::vector<GradCheckFailure> failures;
};

/// Builds a scalar loss from a fresh input on the given graph. Must be a pure
/// function of the input and the parameter values.
using LossBuilder = std::function<Tensor(Graph&, const Tensor& input)>;

/// Compares backprop gradients of every element of `params` (and optionally
/// the input, drawn uniformly from [-1,1]) against central differences.
GradCheckReport grad_check(const LossBuilder& build, const Shape& input_shape, std::vector<NamedTensor> params,
                           const GradCheckOptions& options = {});

double relative_error(double analytic, double numeric, double floor);

}  // namespace madv
