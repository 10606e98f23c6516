#include <algorithm>
#include <array>
#include <cmath>
#include <numbers>
#include <stdexcept>

#include "madv/rng.hpp"
#include "madv/synthdata.hpp"

namespace madv::synthdata {
namespace {

constexpr double kOuterRadius = 24.0;
constexpr double kInnerRatio = 0.72;
constexpr int kSuper = 4;
// Octagons carry a dark horizontal bar on the face, like a no-entry sign.
constexpr double kBarHalfWidth = 0.42;
constexpr double kBarHalfHeight = 0.11;

struct Polygon {
  int sides = 0;  // 0 = circle
  double vertex_angle = 0.0;
};

Polygon outline(GlyphShape shape) {
  constexpr double pi = std::numbers::pi;
  switch (shape) {
    case GlyphShape::circle:
      return {0, 0.0};
    case GlyphShape::triangle:
      return {3, -pi / 2.0};  // apex up (y grows downward)
    case GlyphShape::octagon:
      return {8, pi / 8.0};  // flat top
    case GlyphShape::square:
      return {4, pi / 4.0};  // axis aligned
    case GlyphShape::diamond:
      return {4, 0.0};
  }
  return {};
}

bool inside(const Polygon& poly, double dx, double dy, double radius) {
  const double r = std::hypot(dx, dy);
  if (poly.sides == 0) return r <= radius;
  const double wedge = 2.0 * std::numbers::pi / poly.sides;
  double t = std::fmod(std::atan2(dy, dx) - poly.vertex_angle, wedge);
  if (t < 0) t += wedge;
  return r * std::cos(t - wedge / 2.0) <= radius * std::cos(wedge / 2.0);
}

}  // namespace

GlyphSpec glyph_spec(std::size_t class_id) {
  if (class_id >= kGlyphClasses) throw std::out_of_range("glyph class out of range");
  GlyphSpec spec;
  spec.shape = static_cast<GlyphShape>(class_id / 2);
  spec.border = class_id % 2 == 0 ? BorderColor::red : BorderColor::blue;
  return spec;
}

const char* glyph_name(std::size_t class_id) {
  static constexpr std::array<const char*, kGlyphClasses> names = {
      "circle-red",  "circle-blue", "triangle-red", "triangle-blue", "octagon-red",
      "octagon-blue", "square-red", "square-blue",  "diamond-red",   "diamond-blue"};
  if (class_id >= kGlyphClasses) throw std::out_of_range("glyph class out of range");
  return names[class_id];
}

Tensor render_glyph(std::size_t class_id, std::uint64_t sample_seed) {
  const GlyphSpec spec = glyph_spec(class_id);
  Rng rng(derive_seed(sample_seed, class_id));
  std::uniform_real_distribution<double> uni(0.0, 1.0);
  auto between = [&](double lo, double hi) { return lo + (hi - lo) * uni(rng); };

  const double n = static_cast<double>(spec.side);
  const double cx = n / 2.0 + between(-spec.max_shift, spec.max_shift);
  const double cy = n / 2.0 + between(-spec.max_shift, spec.max_shift);
  const double radius = kOuterRadius * (n / kGlyphSide) * between(1.0 - spec.scale_jitter, 1.0 + spec.scale_jitter);
  const std::array<double, 3> bg_top = {between(0.25, 0.6), between(0.3, 0.65), between(0.25, 0.6)};
  const double bg_shade = between(-0.1, 0.1);
  std::array<double, 3> border = spec.border == BorderColor::red ? std::array<double, 3>{0.85, 0.12, 0.12}
                                                                   : std::array<double, 3>{0.1, 0.25, 0.85};
  for (auto& c : border) c = std::clamp(c + between(-0.05, 0.05), 0.0, 1.0);
  const double face = between(0.85, 0.95);
  const double bar_shade = between(0.08, 0.2);
  const Polygon poly = outline(spec.shape);
  const bool has_bar = spec.shape == GlyphShape::octagon;
  const double bar_w = kBarHalfWidth * radius;
  const double bar_h = kBarHalfHeight * radius;

  const std::size_t side = spec.side;
  Tensor img(Shape{3, side, side});
  std::normal_distribution<double> noise(0.0, spec.noise_sigma);
  for (std::size_t i = 0; i < side; ++i) {
    const double bg_mix = bg_shade * (static_cast<double>(i) / n - 0.5);
    for (std::size_t j = 0; j < side; ++j) {
      int outer = 0, inner = 0, bar = 0;
      const double pdx = static_cast<double>(j) + 0.5 - cx;
      const double pdy = static_cast<double>(i) + 0.5 - cy;
      const double r = std::hypot(pdx, pdy);
      const bool near_bar = has_bar && std::abs(pdx) < bar_w + 1.0 && std::abs(pdy) < bar_h + 1.0;
      if (r > radius + 1.0) {
        // Entirely outside the circumscribed circle.
      } else if (r + 1.0 < radius * kInnerRatio * 0.5 && !near_bar) {
        outer = inner = kSuper * kSuper;
      } else {
      for (int a = 0; a < kSuper; ++a) {
        for (int b = 0; b < kSuper; ++b) {
          const double dx = static_cast<double>(j) + (b + 0.5) / kSuper - cx;
          const double dy = static_cast<double>(i) + (a + 0.5) / kSuper - cy;
          outer += inside(poly, dx, dy, radius);
          inner += inside(poly, dx, dy, radius * kInnerRatio);
          bar += near_bar && std::abs(dx) < bar_w && std::abs(dy) < bar_h;
        }
      }
      }
      const double c_out = outer / double(kSuper * kSuper);
      const double c_in = inner / double(kSuper * kSuper);
      const double c_bar = bar / double(kSuper * kSuper);
      for (std::size_t ch = 0; ch < 3; ++ch) {
        const double bg = bg_top[ch] + bg_mix;
        double v = bg * (1.0 - c_out) + border[ch] * (c_out - c_in) + face * (c_in - c_bar) + bar_shade * c_bar;
        v += noise(rng);
        img[(ch * side + i) * side + j] = std::clamp(v, 0.0, 1.0);
      }
    }
  }
  return img;
}

Dataset gen_glyphs(std::size_t count_per_class, std::uint64_t seed) {
  if (count_per_class == 0) throw std::invalid_argument("gen_glyphs: count must be at least 1");
  Dataset ds;
  ds.classes = kGlyphClasses;
  const auto n_train = std::min<std::size_t>(
      count_per_class, std::max<std::size_t>(1, static_cast<std::size_t>(std::llround(0.8 * count_per_class))));
  for (std::size_t c = 0; c < kGlyphClasses; ++c) {
    for (std::size_t k = 0; k < count_per_class; ++k) {
      Example ex{render_glyph(c, derive_seed(seed, c * 1000003ULL + k)), c};
      (k < n_train ? ds.train : ds.test).push_back(std::move(ex));
    }
  }
  return ds;
}

}  // namespace madv::synthdata
