#pragma once

#include <cstddef>
#include <memory>
#include <span>
#include <string>
#include <vector>

namespace madv {

using Shape = std::vector<std::size_t>;

/// Number of elements described by `shape` (1 for rank 0).
std::size_t numel(const Shape& shape);
std::string shape_str(const Shape& shape);

namespace detail {
struct TensorImpl {
  Shape shape;
  std::vector<double> data;
  std::vector<double> grad;  // empty until first accumulation
  bool requires_grad = false;
  bool tracked = false;  // requires_grad, or produced from a tracked operand
};
}  // namespace detail

/// Dense row-major real64 array.
///
/// A Tensor is a handle: copies share storage, which is what lets the tape
/// hand gradients back to the parameters a network owns. Use clone() for an
/// independent copy.
class Tensor {
 public:
  Tensor();  // rank-0 zero
  explicit Tensor(Shape shape, double fill = 0.0);
  Tensor(Shape shape, std::vector<double> values);

  static Tensor scalar(double value);

  const Shape& shape() const { return impl_->shape; }
  std::size_t rank() const { return impl_->shape.size(); }
  std::size_t size() const { return impl_->data.size(); }
  std::size_t dim(std::size_t axis) const;

  std::span<double> data() { return impl_->data; }
  std::span<const double> data() const { return impl_->data; }
  const std::vector<double>& values() const { return impl_->data; }
  double& operator[](std::size_t i) { return impl_->data[i]; }
  double operator[](std::size_t i) const { return impl_->data[i]; }
  /// Value of a single-element tensor.
  double item() const;

  bool requires_grad() const { return impl_->requires_grad; }
  Tensor& set_requires_grad(bool on);
  bool tracked() const { return impl_->tracked; }

  bool has_grad() const { return !impl_->grad.empty(); }
  std::span<const double> grad() const { return impl_->grad; }
  /// Gradient storage is shared by every handle, so backward rules may
  /// accumulate through const handles.
  std::span<double> grad_mut() const;
  /// Allocates (if needed) and fills the gradient buffer with zeros.
  void zero_grad();
  void clear_grad() { impl_->grad.clear(); }

  /// Independent copy of the values; never tracked.
  Tensor detach() const;
  /// Independent copy that keeps the requires_grad flag.
  Tensor clone() const;
  Tensor reshaped(Shape shape) const;

  bool same_storage(const Tensor& other) const { return impl_ == other.impl_; }
  bool all_finite() const;

  const std::shared_ptr<detail::TensorImpl>& impl() const { return impl_; }

 private:
  std::shared_ptr<detail::TensorImpl> impl_;
};

struct NamedTensor {
  std::string name;
  Tensor tensor;
};

}  // namespace madv
