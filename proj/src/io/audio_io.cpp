#include <algorithm>
#include <cmath>

#include "madv/io.hpp"

namespace madv::io {
namespace {

void put(std::string& out, std::uint32_t v, int width) {
  for (int i = 0; i < width; ++i) out.push_back(static_cast<char>((v >> (8 * i)) & 0xFF));
}

class WavReader {
 public:
  explicit WavReader(std::string_view bytes) : bytes_(bytes) {}
  std::uint32_t uint(int width) {
    need(static_cast<std::size_t>(width));
    std::uint32_t v = 0;
    for (int i = 0; i < width; ++i) v |= std::uint32_t(static_cast<unsigned char>(bytes_[pos_ + i])) << (8 * i);
    pos_ += static_cast<std::size_t>(width);
    return v;
  }
  std::string_view tag() {
    need(4);
    auto s = bytes_.substr(pos_, 4);
    pos_ += 4;
    return s;
  }
  void skip(std::size_t n) {
    need(n);
    pos_ += n;
  }
  void need(std::size_t n) const {
    if (n > bytes_.size() - pos_) {
      throw FormatError("WAV truncated at byte " + std::to_string(bytes_.size()) + " while reading " +
                        std::to_string(n) + " bytes at offset " + std::to_string(pos_));
    }
  }
  std::size_t pos() const { return pos_; }
  bool at_end() const { return pos_ >= bytes_.size(); }

 private:
  std::string_view bytes_;
  std::size_t pos_ = 0;
};

}  // namespace

std::int16_t quantize_pcm(double v) {
  const double scaled = std::floor(v * 32767.0 + 0.5);
  return static_cast<std::int16_t>(std::clamp(scaled, -32768.0, 32767.0));
}

std::string encode_wav(const Tensor& wave, std::uint32_t sample_rate) {
  if (wave.rank() != 2 || wave.dim(0) != 1) throw std::invalid_argument("encode_wav expects [1,N], got " + shape_str(wave.shape()));
  const auto n = static_cast<std::uint32_t>(wave.dim(1));
  std::string out = "RIFF";
  put(out, 36 + 2 * n, 4);
  out += "WAVEfmt ";
  put(out, 16, 4);
  put(out, 1, 2);  // PCM
  put(out, 1, 2);  // mono
  put(out, sample_rate, 4);
  put(out, sample_rate * 2, 4);
  put(out, 2, 2);
  put(out, 16, 2);
  out += "data";
  put(out, 2 * n, 4);
  for (double v : wave.data()) put(out, static_cast<std::uint16_t>(quantize_pcm(v)), 2);
  return out;
}

Tensor decode_wav(std::string_view bytes, std::uint32_t* sample_rate) {
  WavReader r(bytes);
  if (r.tag() != "RIFF") throw FormatError("not a RIFF file");
  r.uint(4);
  if (r.tag() != "WAVE") throw FormatError("RIFF file is not WAVE");
  bool have_fmt = false;
  std::uint32_t rate = 0;
  while (true) {
    if (r.at_end()) throw FormatError("WAV truncated at byte " + std::to_string(r.pos()) + ": no data chunk");
    const auto id = r.tag();
    const std::uint32_t size = r.uint(4);
    if (id == "fmt ") {
      if (size < 16) throw FormatError("WAV fmt chunk too short");
      const auto format = r.uint(2);
      const auto channels = r.uint(2);
      rate = r.uint(4);
      r.uint(4);
      r.uint(2);
      const auto bits = r.uint(2);
      r.skip(size - 16);
      if (format != 1) throw FormatError("WAV is not PCM (format " + std::to_string(format) + ")");
      if (channels != 1) throw FormatError("WAV must be mono, got " + std::to_string(channels) + " channels");
      if (bits != 16) throw FormatError("WAV must be 16-bit, got " + std::to_string(bits) + " bits");
      have_fmt = true;
    } else if (id == "data") {
      if (!have_fmt) throw FormatError("WAV data chunk precedes fmt chunk");
      if (size % 2 != 0 || size == 0) throw FormatError("WAV data chunk has invalid size " + std::to_string(size));
      r.need(size);
      Tensor out(Shape{1, size / 2});
      for (std::size_t i = 0; i < size / 2; ++i) {
        const auto s = static_cast<std::int16_t>(static_cast<std::uint16_t>(r.uint(2)));
        out[i] = std::clamp(static_cast<double>(s) / 32767.0, -1.0, 1.0);
      }
      if (sample_rate) *sample_rate = rate;
      return out;
    } else {
      r.skip(size + (size & 1));
    }
  }
}

void write_wav(const std::filesystem::path& path, const Tensor& wave, std::uint32_t sample_rate) {
  write_file_atomic(path, encode_wav(wave, sample_rate));
}

Tensor read_wav(const std::filesystem::path& path, std::uint32_t* sample_rate) {
  return decode_wav(read_file(path), sample_rate);
}

}  // namespace madv::io
