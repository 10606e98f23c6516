#include <algorithm>
#include <cmath>
#include <stdexcept>

#include "madv/nets.hpp"
#include "madv/ops.hpp"

namespace madv::nets {

Tensor resize_map(const Tensor& map, std::size_t height, std::size_t width) {
  if (map.rank() != 2) throw std::invalid_argument("resize_map expects [h,w], got " + shape_str(map.shape()));
  const std::size_t h = map.dim(0), w = map.dim(1);
  const double sy = static_cast<double>(h) / static_cast<double>(height);
  const double sx = static_cast<double>(w) / static_cast<double>(width);
  const long last_y = static_cast<long>(h) - 1, last_x = static_cast<long>(w) - 1;
  auto at = [&](long y, long x) {
    return map[static_cast<std::size_t>(std::clamp(y, 0L, last_y)) * w + static_cast<std::size_t>(std::clamp(x, 0L, last_x))];
  };
  Tensor out(Shape{height, width});
  for (std::size_t i = 0; i < height; ++i) {
    const double fy = (static_cast<double>(i) + 0.5) * sy - 0.5;
    const double y0 = std::floor(fy), ay = fy - y0;
    for (std::size_t j = 0; j < width; ++j) {
      const double fx = (static_cast<double>(j) + 0.5) * sx - 0.5;
      const double x0 = std::floor(fx), ax = fx - x0;
      const long yi = static_cast<long>(y0), xi = static_cast<long>(x0);
      out[i * width + j] = (1 - ay) * ((1 - ax) * at(yi, xi) + ax * at(yi, xi + 1)) +
                           ay * ((1 - ax) * at(yi + 1, xi) + ax * at(yi + 1, xi + 1));
    }
  }
  return out;
}

Tensor grad_cam(const Classifier& f, const Tensor& image, std::size_t cls) {
  if (cls >= f.num_classes()) {
    throw std::out_of_range("grad_cam: class " + std::to_string(cls) + " outside [0, " +
                            std::to_string(f.num_classes()) + ")");
  }
  // A frozen copy keeps the caller's parameter gradients untouched.
  Classifier frozen(f);
  frozen.set_trainable(false);

  Graph probe = Graph::no_record();
  Tensor acts = frozen.features(probe, image).detach();
  acts.set_requires_grad(true);

  Graph g;
  Tensor logit = ops::select(g, frozen.head(g, acts), cls);
  backprop(g, logit);
  if (!acts.has_grad()) acts.zero_grad();

  const std::size_t channels = acts.dim(0), h = acts.dim(1), w = acts.dim(2);
  const std::size_t plane = h * w;
  auto grad = acts.grad();
  Tensor cam(Shape{h, w});
  for (std::size_t c = 0; c < channels; ++c) {
    double weight = 0.0;
    for (std::size_t p = 0; p < plane; ++p) weight += grad[c * plane + p];
    weight /= static_cast<double>(plane);
    if (weight == 0.0) continue;
    for (std::size_t p = 0; p < plane; ++p) cam[p] += weight * acts[c * plane + p];
  }
  for (auto& v : cam.data()) v = std::max(v, 0.0);

  Tensor out = resize_map(cam, image.dim(1), image.dim(2));
  double top = 0.0;
  for (auto& v : out.data()) {
    v = std::max(v, 0.0);
    top = std::max(top, v);
  }
  if (top > 0.0) {
    for (auto& v : out.data()) v /= top;
  }
  return out;
}

}  // namespace madv::nets
