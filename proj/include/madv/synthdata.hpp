#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "madv/dataset.hpp"
#include "madv/tensor.hpp"

/// Procedural desk-scale data: glyph signs, bug-like reference patches and a
/// tone/chirp audio corpus. Every generator is a pure function of its
/// arguments.
namespace madv::synthdata {

// ---------------------------------------------------------------- glyphs

enum class GlyphShape { circle, triangle, octagon, square, diamond };
enum class BorderColor { red, blue };

constexpr std::size_t kGlyphClasses = 10;
constexpr std::size_t kGlyphSide = 64;

struct GlyphSpec {
  GlyphShape shape = GlyphShape::circle;
  BorderColor border = BorderColor::red;
  double max_shift = 4.0;      // pixels, per axis
  double scale_jitter = 0.10;  // relative
  double noise_sigma = 0.02;
  std::size_t side = kGlyphSide;
};

/// class id = 2 * shape + color, e.g. 4 = red octagon. Octagon faces carry a
/// dark horizontal bar; every other face is plain.
GlyphSpec glyph_spec(std::size_t class_id);
const char* glyph_name(std::size_t class_id);

/// Renders one [3,side,side] sample; deterministic in (class_id, sample_seed).
Tensor render_glyph(std::size_t class_id, std::uint64_t sample_seed);

/// count_per_class samples of every class, split 80/20 per class.
Dataset gen_glyphs(std::size_t count_per_class, std::uint64_t seed);

// ---------------------------------------------------------------- bugs

struct BugSample {
  Tensor image;                      // [3,s,s]
  std::vector<std::uint8_t> body;        // pixels at least half inside the body ellipse
  std::vector<std::uint8_t> background;  // pixels touched by neither body nor legs
};

/// Dark elliptical body (axis ratio 1.5-3) with 4-8 leg strokes on a light
/// background.
BugSample render_bug(std::size_t side, std::uint64_t sample_seed);
std::vector<Tensor> gen_bugs(std::size_t count, std::size_t side, std::uint64_t seed);

/// Loads every decodable P6 image in `dir` (sorted by file name), centre-crops
/// it to a square and resizes it bilinearly to side x side. Unreadable files
/// are skipped and reported through `warnings`.
std::vector<Tensor> load_reference_dir(const std::filesystem::path& dir, std::size_t side,
                                       std::vector<std::string>* warnings = nullptr);
/// Centre crop to a square, then bilinear resize (half-pixel centres).
Tensor crop_resize(const Tensor& image, std::size_t side);

// ---------------------------------------------------------------- audio

constexpr double kSampleRate = 16000.0;
constexpr std::size_t kCommandLength = 4096;
constexpr std::size_t kChirpLength = 1024;
constexpr std::size_t kCommandClasses = 4;

/// Segment frequencies (Hz) of each command class, in time order.
const std::vector<double>& command_pattern(std::size_t class_id);

Tensor render_command(std::size_t class_id, std::uint64_t sample_seed);
/// Upward FM sweep in 2-6 kHz under a smooth envelope.
Tensor render_chirp(std::uint64_t sample_seed);

struct AudioCorpus {
  Dataset commands;
  std::vector<Tensor> chirps;
};

AudioCorpus gen_audio(std::size_t count_per_class, std::size_t chirp_count, std::uint64_t seed);

}  // namespace madv::synthdata
