#include <algorithm>
#include <array>
#include <cmath>
#include <numbers>
#include <stdexcept>

#include "madv/rng.hpp"
#include "madv/synthdata.hpp"

namespace madv::synthdata {
namespace {

constexpr int kSuper = 4;

struct Segment {
  double x0, y0, x1, y1, half_width;
};

double segment_distance(const Segment& s, double x, double y) {
  const double vx = s.x1 - s.x0, vy = s.y1 - s.y0;
  const double len2 = vx * vx + vy * vy;
  double t = len2 > 0 ? ((x - s.x0) * vx + (y - s.y0) * vy) / len2 : 0.0;
  t = std::clamp(t, 0.0, 1.0);
  return std::hypot(x - (s.x0 + t * vx), y - (s.y0 + t * vy));
}

}  // namespace

BugSample render_bug(std::size_t side, std::uint64_t sample_seed) {
  if (side < 4) throw std::invalid_argument("render_bug: side must be at least 4");
  Rng rng(sample_seed);
  std::uniform_real_distribution<double> uni(0.0, 1.0);
  auto between = [&](double lo, double hi) { return lo + (hi - lo) * uni(rng); };
  const double n = static_cast<double>(side);

  const std::array<double, 3> bg = {between(0.72, 0.9), between(0.74, 0.92), between(0.62, 0.82)};
  const double cx = n / 2.0 + between(-n / 12.0, n / 12.0);
  const double cy = n / 2.0 + between(-n / 12.0, n / 12.0);
  const double major = n * between(0.22, 0.32);
  const double minor = major / between(1.5, 3.0);
  const double heading = between(0.0, std::numbers::pi);
  const double shade = between(0.7, 1.1);
  const std::array<double, 3> body = {std::clamp(0.30 * shade + between(-0.06, 0.06), 0.0, 1.0),
                                      std::clamp(0.22 * shade + between(-0.06, 0.06), 0.0, 1.0),
                                      std::clamp(0.12 * shade + between(-0.06, 0.06), 0.0, 1.0)};
  const double ch = std::cos(heading), sh = std::sin(heading);

  std::vector<Segment> legs;
  const int leg_count = 4 + static_cast<int>(uni(rng) * 5.0) % 5;
  const double half_width = std::max(0.45, n / 40.0);
  for (int k = 0; k < leg_count; ++k) {
    // Legs spread along both flanks of the body.
    const double side_sign = (k % 2 == 0) ? 1.0 : -1.0;
    const double along = major * between(-0.6, 0.6);
    const double ax = along, ay = side_sign * minor * std::sqrt(std::max(0.0, 1.0 - (along * along) / (major * major)));
    const double len = n * between(0.15, 0.3);
    const double tilt = between(-0.6, 0.6);
    const double dx = std::sin(tilt), dy = side_sign * std::cos(tilt);
    const double bx = ax + dx * len, by = ay + dy * len;
    legs.push_back({cx + ch * ax - sh * ay, cy + sh * ax + ch * ay, cx + ch * bx - sh * by, cy + sh * bx + ch * by,
                    half_width});
  }

  BugSample out{Tensor(Shape{3, side, side}), std::vector<std::uint8_t>(side * side, 0),
                std::vector<std::uint8_t>(side * side, 0)};
  std::normal_distribution<double> noise(0.0, 0.02);
  for (std::size_t i = 0; i < side; ++i) {
    for (std::size_t j = 0; j < side; ++j) {
      int in_body = 0, covered = 0;
      for (int a = 0; a < kSuper; ++a) {
        for (int b = 0; b < kSuper; ++b) {
          const double x = static_cast<double>(j) + (b + 0.5) / kSuper - cx;
          const double y = static_cast<double>(i) + (a + 0.5) / kSuper - cy;
          const double u = ch * x + sh * y;
          const double v = -sh * x + ch * y;
          const bool b_hit = (u * u) / (major * major) + (v * v) / (minor * minor) <= 1.0;
          bool l_hit = false;
          for (const auto& leg : legs) {
            if (segment_distance(leg, x + cx, y + cy) <= leg.half_width) {
              l_hit = true;
              break;
            }
          }
          in_body += b_hit;
          covered += (b_hit || l_hit);
        }
      }
      const double cov = covered / double(kSuper * kSuper);
      const std::size_t p = i * side + j;
      out.body[p] = 2 * in_body >= kSuper * kSuper;
      out.background[p] = covered == 0;
      for (std::size_t c = 0; c < 3; ++c) {
        const double v = bg[c] * (1.0 - cov) + body[c] * cov + noise(rng);
        out.image[c * side * side + p] = std::clamp(v, 0.0, 1.0);
      }
    }
  }
  return out;
}

std::vector<Tensor> gen_bugs(std::size_t count, std::size_t side, std::uint64_t seed) {
  if (count == 0) throw std::invalid_argument("gen_bugs: count must be at least 1");
  std::vector<Tensor> out;
  out.reserve(count);
  for (std::size_t k = 0; k < count; ++k) out.push_back(render_bug(side, derive_seed(seed, k)).image);
  return out;
}

}  // namespace madv::synthdata
