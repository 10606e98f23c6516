#include <algorithm>
#include <cmath>
#include <numbers>
#include <stdexcept>

#include "madv/rng.hpp"
#include "madv/synthdata.hpp"

namespace madv::synthdata {

const std::vector<double>& command_pattern(std::size_t class_id) {
  static const std::vector<std::vector<double>> patterns = {
      {500.0, 900.0, 1300.0, 1700.0},
      {1700.0, 1300.0, 900.0, 500.0},
      {500.0, 900.0, 1300.0, 500.0},
      {1300.0, 500.0, 1700.0, 900.0},
  };
  if (class_id >= patterns.size()) throw std::out_of_range("command class out of range");
  return patterns[class_id];
}

Tensor render_command(std::size_t class_id, std::uint64_t sample_seed) {
  const auto& pattern = command_pattern(class_id);
  Rng rng(derive_seed(sample_seed, class_id));
  std::uniform_real_distribution<double> uni(0.0, 1.0);
  auto between = [&](double lo, double hi) { return lo + (hi - lo) * uni(rng); };
  std::normal_distribution<double> noise(0.0, 0.01);

  const std::size_t n = kCommandLength;
  const std::size_t segment = n / pattern.size();
  const double amplitude = between(0.45, 0.65);
  const double detune = between(0.97, 1.03);
  const long shift = static_cast<long>(between(-96.0, 96.0));
  const double ramp = 64.0;

  std::vector<double> phases;
  for (std::size_t k = 0; k < pattern.size(); ++k) phases.push_back(between(0.0, 2.0 * std::numbers::pi));

  Tensor out(Shape{1, n});
  for (std::size_t i = 0; i < n; ++i) {
    const long t = static_cast<long>(i) - shift;
    double v = 0.0;
    if (t >= 0 && t < static_cast<long>(n)) {
      const std::size_t k = std::min(pattern.size() - 1, static_cast<std::size_t>(t) / segment);
      const double local = static_cast<double>(static_cast<std::size_t>(t) - k * segment);
      const double env = std::min({1.0, local / ramp, (static_cast<double>(segment) - local) / ramp});
      const double f = pattern[k] * detune;
      const double w = 2.0 * std::numbers::pi * f * static_cast<double>(t) / kSampleRate + phases[k];
      v = amplitude * env * (std::sin(w) + 0.3 * std::sin(2.0 * w));
    }
    out[i] = std::clamp(v + noise(rng), -1.0, 1.0);
  }
  return out;
}

Tensor render_chirp(std::uint64_t sample_seed) {
  Rng rng(sample_seed);
  std::uniform_real_distribution<double> uni(0.0, 1.0);
  auto between = [&](double lo, double hi) { return lo + (hi - lo) * uni(rng); };
  const std::size_t n = kChirpLength;
  const double f0 = between(2000.0, 3000.0);
  const double f1 = between(4500.0, 6000.0);
  const double amplitude = between(0.5, 0.9);
  const double duration = static_cast<double>(n) / kSampleRate;
  const double phase0 = between(0.0, 2.0 * std::numbers::pi);
  Tensor out(Shape{1, n});
  for (std::size_t i = 0; i < n; ++i) {
    const double t = static_cast<double>(i) / kSampleRate;
    const double phase = 2.0 * std::numbers::pi * (f0 * t + (f1 - f0) * t * t / (2.0 * duration)) + phase0;
    const double env = std::sin(std::numbers::pi * (static_cast<double>(i) + 0.5) / static_cast<double>(n));
    out[i] = std::clamp(amplitude * env * std::sin(phase), -1.0, 1.0);
  }
  return out;
}

AudioCorpus gen_audio(std::size_t count_per_class, std::size_t chirp_count, std::uint64_t seed) {
  if (count_per_class == 0 || chirp_count == 0) throw std::invalid_argument("gen_audio: counts must be at least 1");
  AudioCorpus corpus;
  corpus.commands.classes = kCommandClasses;
  const auto n_train = std::min<std::size_t>(
      count_per_class, std::max<std::size_t>(1, static_cast<std::size_t>(std::llround(0.8 * count_per_class))));
  for (std::size_t c = 0; c < kCommandClasses; ++c) {
    for (std::size_t k = 0; k < count_per_class; ++k) {
      Example ex{render_command(c, derive_seed(seed, c * 1000003ULL + k)), c};
      (k < n_train ? corpus.commands.train : corpus.commands.test).push_back(std::move(ex));
    }
  }
  for (std::size_t k = 0; k < chirp_count; ++k) corpus.chirps.push_back(render_chirp(derive_seed(seed ^ 0xC41u, k)));
  return corpus;
}

}  // namespace madv::synthdata
