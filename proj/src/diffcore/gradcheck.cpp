#include "madv/gradcheck.hpp"

#include <algorithm>
#include <cmath>
#include <random>

#include "madv/rng.hpp"

namespace madv {

double relative_error(double analytic, double numeric, double floor) {
  const double denom = std::max({std::abs(analytic), std::abs(numeric), floor});
  return std::abs(analytic - numeric) / denom;
}

namespace {

double evaluate(const LossBuilder& build, const Tensor& input) {
  Graph g;
  return build(g, input).item();
}

void check_tensor(const LossBuilder& build, const Tensor& input, const std::string& name, Tensor target,
                  const std::vector<double>& analytic, const GradCheckOptions& opt, GradCheckReport& report) {
  auto values = target.data();
  for (std::size_t i = 0; i < values.size(); ++i) {
    const double saved = values[i];
    values[i] = saved + opt.step;
    const double up = evaluate(build, input);
    values[i] = saved - opt.step;
    const double down = evaluate(build, input);
    values[i] = saved;
    const double numeric = (up - down) / (2.0 * opt.step);
    const double err = relative_error(analytic[i], numeric, opt.floor);
    ++report.checked;
    report.max_rel_error = std::max(report.max_rel_error, err);
    if (!(err < opt.tolerance)) {
      report.passed = false;
      report.failures.push_back({name, i, analytic[i], numeric, err});
    }
  }
}

}  // namespace

GradCheckReport grad_check(const LossBuilder& build, const Shape& input_shape, std::vector<NamedTensor> params,
                           const GradCheckOptions& options) {
  Rng rng(options.seed);
  std::uniform_real_distribution<double> uni(-1.0, 1.0);
  Tensor input(input_shape);
  for (auto& v : input.data()) v = uni(rng);
  input.set_requires_grad(options.check_input);

  for (auto& p : params) p.tensor.zero_grad();
  if (options.check_input) input.zero_grad();
  {
    Graph g;
    Tensor loss = build(g, input);
    if (loss.tracked()) backprop(g, loss);
  }

  GradCheckReport report;
  auto analytic_of = [](const Tensor& t) {
    return t.has_grad() ? std::vector<double>(t.grad().begin(), t.grad().end()) : std::vector<double>(t.size(), 0.0);
  };
  for (auto& p : params) check_tensor(build, input, p.name, p.tensor, analytic_of(p.tensor), options, report);
  if (options.check_input) check_tensor(build, input, "input", input, analytic_of(input), options, report);
  return report;
}

}  // namespace madv
