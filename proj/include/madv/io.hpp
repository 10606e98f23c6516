#pragma once

#include <cstdint>
#include <filesystem>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include "madv/tensor.hpp"

/// Bit-exact persistence: tensor checkpoints, binary PPM/PGM images and
/// 16-bit PCM WAV audio.
namespace madv::io {

class FormatError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Writes to a sibling temporary file, then renames over `path`.
void write_file_atomic(const std::filesystem::path& path, std::string_view bytes);
std::string read_file(const std::filesystem::path& path);

// Checkpoint layout, all integers little-endian:
//   "MADV1"
//   per tensor: u32 name length, name bytes, u32 rank, rank x u32 extents,
//               numel x f32 values
//   u64 byte count of everything above (verified on load)
std::string encode_checkpoint(const std::vector<NamedTensor>& tensors);
std::vector<NamedTensor> decode_checkpoint(std::string_view bytes);
void save_checkpoint(const std::filesystem::path& path, const std::vector<NamedTensor>& tensors);
std::vector<NamedTensor> load_checkpoint(const std::filesystem::path& path);
/// Rounds every value through float, the on-disk precision.
Tensor quantize_f32(const Tensor& t);

/// round(255 v) with halves rounded up, clamped to [0, 255].
std::uint8_t quantize_u8(double v);

/// [3,H,W] in [0,1] <-> binary P6 with maxval 255.
std::string encode_ppm(const Tensor& rgb);
Tensor decode_ppm(std::string_view bytes);
void write_ppm(const std::filesystem::path& path, const Tensor& rgb);
Tensor read_ppm(const std::filesystem::path& path);

/// [H,W] or [1,H,W] in [0,1] <-> binary P5 with maxval 255. Decodes to [H,W].
std::string encode_pgm(const Tensor& gray);
Tensor decode_pgm(std::string_view bytes);
void write_pgm(const std::filesystem::path& path, const Tensor& gray);
Tensor read_pgm(const std::filesystem::path& path);

/// v * 32767 with halves rounded up, clamped to the int16 range.
std::int16_t quantize_pcm(double v);

/// [1,N] in [-1,1] <-> mono 16-bit PCM WAV. Samples decode as s / 32767,
/// clamped to [-1,1].
std::string encode_wav(const Tensor& wave, std::uint32_t sample_rate = 16000);
Tensor decode_wav(std::string_view bytes, std::uint32_t* sample_rate = nullptr);
void write_wav(const std::filesystem::path& path, const Tensor& wave, std::uint32_t sample_rate = 16000);
Tensor read_wav(const std::filesystem::path& path, std::uint32_t* sample_rate = nullptr);

}  // namespace madv::io
