#include <algorithm>
#include <cctype>
#include <cmath>

#include "madv/io.hpp"

namespace madv::io {
namespace {

struct PnmHeader {
  std::size_t width = 0, height = 0;
  std::size_t raster_offset = 0;
};

PnmHeader parse_pnm_header(std::string_view bytes, std::string_view magic) {
  if (bytes.size() < 2 || bytes.substr(0, 2) != magic) {
    throw FormatError("expected binary " + std::string(magic) + " image header");
  }
  std::size_t pos = 2;
  auto next_number = [&](const char* what) -> std::size_t {
    while (pos < bytes.size()) {
      const char c = bytes[pos];
      if (c == '#') {
        while (pos < bytes.size() && bytes[pos] != '\n') ++pos;
      } else if (std::isspace(static_cast<unsigned char>(c))) {
        ++pos;
      } else {
        break;
      }
    }
    if (pos >= bytes.size() || !std::isdigit(static_cast<unsigned char>(bytes[pos]))) {
      throw FormatError(std::string("malformed image header: missing ") + what + " at byte " + std::to_string(pos));
    }
    std::size_t v = 0;
    while (pos < bytes.size() && std::isdigit(static_cast<unsigned char>(bytes[pos]))) {
      v = v * 10 + static_cast<std::size_t>(bytes[pos] - '0');
      if (v > (1u << 24)) throw FormatError(std::string("malformed image header: ") + what + " too large");
      ++pos;
    }
    return v;
  };
  PnmHeader h;
  h.width = next_number("width");
  h.height = next_number("height");
  const std::size_t maxval = next_number("maxval");
  if (h.width == 0 || h.height == 0) throw FormatError("image has zero extent");
  if (maxval != 255) throw FormatError("only maxval 255 is supported, got " + std::to_string(maxval));
  if (pos >= bytes.size() || !std::isspace(static_cast<unsigned char>(bytes[pos]))) {
    throw FormatError("malformed image header: no separator before raster");
  }
  h.raster_offset = pos + 1;
  return h;
}

std::string header(std::string_view magic, std::size_t w, std::size_t h) {
  return std::string(magic) + "\n" + std::to_string(w) + " " + std::to_string(h) + "\n255\n";
}

}  // namespace

std::uint8_t quantize_u8(double v) {
  const double scaled = std::floor(255.0 * v + 0.5);
  return static_cast<std::uint8_t>(std::clamp(scaled, 0.0, 255.0));
}

std::string encode_ppm(const Tensor& rgb) {
  if (rgb.rank() != 3 || rgb.dim(0) != 3) throw std::invalid_argument("encode_ppm expects [3,H,W], got " + shape_str(rgb.shape()));
  const std::size_t h = rgb.dim(1), w = rgb.dim(2), plane = h * w;
  std::string out = header("P6", w, h);
  out.reserve(out.size() + 3 * plane);
  for (std::size_t p = 0; p < plane; ++p) {
    for (std::size_t c = 0; c < 3; ++c) out.push_back(static_cast<char>(quantize_u8(rgb[c * plane + p])));
  }
  return out;
}

Tensor decode_ppm(std::string_view bytes) {
  const auto h = parse_pnm_header(bytes, "P6");
  const std::size_t plane = h.width * h.height;
  if (bytes.size() - h.raster_offset < 3 * plane) {
    throw FormatError("P6 raster truncated at byte " + std::to_string(bytes.size()));
  }
  Tensor out(Shape{3, h.height, h.width});
  for (std::size_t p = 0; p < plane; ++p) {
    for (std::size_t c = 0; c < 3; ++c) {
      out[c * plane + p] = static_cast<unsigned char>(bytes[h.raster_offset + 3 * p + c]) / 255.0;
    }
  }
  return out;
}

void write_ppm(const std::filesystem::path& path, const Tensor& rgb) { write_file_atomic(path, encode_ppm(rgb)); }
Tensor read_ppm(const std::filesystem::path& path) { return decode_ppm(read_file(path)); }

std::string encode_pgm(const Tensor& gray) {
  std::size_t h = 0, w = 0;
  if (gray.rank() == 2) {
    h = gray.dim(0);
    w = gray.dim(1);
  } else if (gray.rank() == 3 && gray.dim(0) == 1) {
    h = gray.dim(1);
    w = gray.dim(2);
  } else {
    throw std::invalid_argument("encode_pgm expects [H,W] or [1,H,W], got " + shape_str(gray.shape()));
  }
  std::string out = header("P5", w, h);
  for (double v : gray.data()) out.push_back(static_cast<char>(quantize_u8(v)));
  return out;
}

Tensor decode_pgm(std::string_view bytes) {
  const auto h = parse_pnm_header(bytes, "P5");
  const std::size_t plane = h.width * h.height;
  if (bytes.size() - h.raster_offset < plane) {
    throw FormatError("P5 raster truncated at byte " + std::to_string(bytes.size()));
  }
  Tensor out(Shape{h.height, h.width});
  for (std::size_t p = 0; p < plane; ++p) out[p] = static_cast<unsigned char>(bytes[h.raster_offset + p]) / 255.0;
  return out;
}

void write_pgm(const std::filesystem::path& path, const Tensor& gray) { write_file_atomic(path, encode_pgm(gray)); }
Tensor read_pgm(const std::filesystem::path& path) { return decode_pgm(read_file(path)); }

}  // namespace madv::io
