#include <algorithm>
#include <cmath>
#include <iostream>
#include <stdexcept>

#include "madv/io.hpp"
#include "madv/synthdata.hpp"

namespace madv::synthdata {

Tensor crop_resize(const Tensor& image, std::size_t side) {
  if (image.rank() != 3) throw std::invalid_argument("crop_resize expects [c,H,W], got " + shape_str(image.shape()));
  const std::size_t c = image.dim(0), h = image.dim(1), w = image.dim(2);
  const std::size_t crop = std::min(h, w);
  const std::size_t top = (h - crop) / 2;
  const std::size_t left = (w - crop) / 2;
  const double scale = static_cast<double>(crop) / static_cast<double>(side);
  Tensor out(Shape{c, side, side});
  const long last = static_cast<long>(crop) - 1;
  auto at = [&](std::size_t ch, long y, long x) {
    y = std::clamp(y, 0L, last);
    x = std::clamp(x, 0L, last);
    return image[(ch * h + top + static_cast<std::size_t>(y)) * w + left + static_cast<std::size_t>(x)];
  };
  for (std::size_t i = 0; i < side; ++i) {
    const double sy = (static_cast<double>(i) + 0.5) * scale - 0.5;
    const double fy = std::floor(sy);
    const double ay = sy - fy;
    for (std::size_t j = 0; j < side; ++j) {
      const double sx = (static_cast<double>(j) + 0.5) * scale - 0.5;
      const double fx = std::floor(sx);
      const double ax = sx - fx;
      const long y0 = static_cast<long>(fy), x0 = static_cast<long>(fx);
      for (std::size_t ch = 0; ch < c; ++ch) {
        double v = (1 - ay) * ((1 - ax) * at(ch, y0, x0) + ax * at(ch, y0, x0 + 1)) +
                   ay * ((1 - ax) * at(ch, y0 + 1, x0) + ax * at(ch, y0 + 1, x0 + 1));
        // Identity scale hits texel centres exactly; keep those bit-exact.
        if (ax == 0.0 && ay == 0.0) v = at(ch, y0, x0);
        out[(ch * side + i) * side + j] = std::clamp(v, 0.0, 1.0);
      }
    }
  }
  return out;
}

std::vector<Tensor> load_reference_dir(const std::filesystem::path& dir, std::size_t side,
                                       std::vector<std::string>* warnings) {
  if (!std::filesystem::is_directory(dir)) throw std::invalid_argument("reference directory not found: " + dir.string());
  std::vector<std::filesystem::path> files;
  for (const auto& entry : std::filesystem::directory_iterator(dir)) {
    if (entry.is_regular_file()) files.push_back(entry.path());
  }
  std::sort(files.begin(), files.end());
  std::vector<Tensor> out;
  for (const auto& f : files) {
    try {
      out.push_back(crop_resize(io::read_ppm(f), side));
    } catch (const std::exception& e) {
      const std::string msg = "skipping " + f.filename().string() + ": " + e.what();
      if (warnings) {
        warnings->push_back(msg);
      } else {
        std::cerr << "warning: " << msg << "\n";
      }
    }
  }
  if (out.empty()) throw std::runtime_error("no decodable reference images in " + dir.string());
  return out;
}

}  // namespace madv::synthdata
