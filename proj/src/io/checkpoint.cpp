#include <bit>
#include <cstring>
#include <fstream>
#include <sstream>
#include <system_error>

#include "madv/io.hpp"

namespace madv::io {
namespace {

constexpr std::string_view kMagic = "MADV1";

void put_u32(std::string& out, std::uint32_t v) {
  for (int i = 0; i < 4; ++i) out.push_back(static_cast<char>((v >> (8 * i)) & 0xFF));
}

void put_u64(std::string& out, std::uint64_t v) {
  for (int i = 0; i < 8; ++i) out.push_back(static_cast<char>((v >> (8 * i)) & 0xFF));
}

class Reader {
 public:
  Reader(std::string_view bytes, std::size_t end) : bytes_(bytes), end_(end) {}

  std::uint64_t uint(int width) {
    need(static_cast<std::size_t>(width));
    std::uint64_t v = 0;
    for (int i = 0; i < width; ++i) v |= std::uint64_t(static_cast<unsigned char>(bytes_[pos_ + i])) << (8 * i);
    pos_ += static_cast<std::size_t>(width);
    return v;
  }
  std::string_view take(std::size_t n) {
    need(n);
    auto s = bytes_.substr(pos_, n);
    pos_ += n;
    return s;
  }
  std::size_t pos() const { return pos_; }
  bool done() const { return pos_ == end_; }

 private:
  void need(std::size_t n) const {
    if (n > end_ - pos_) {
      throw FormatError("checkpoint truncated at byte " + std::to_string(pos_) + " (needed " + std::to_string(n) +
                        " more bytes)");
    }
  }
  std::string_view bytes_;
  std::size_t end_;
  std::size_t pos_ = 0;
};

}  // namespace

void write_file_atomic(const std::filesystem::path& path, std::string_view bytes) {
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  auto tmp = path;
  tmp += ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw std::runtime_error("cannot open " + tmp.string() + " for writing");
    out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
    if (!out) throw std::runtime_error("write failed for " + tmp.string());
  }
  std::filesystem::rename(tmp, path);
}

std::string read_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot open " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

std::string encode_checkpoint(const std::vector<NamedTensor>& tensors) {
  std::string out(kMagic);
  for (const auto& [name, t] : tensors) {
    put_u32(out, static_cast<std::uint32_t>(name.size()));
    out += name;
    put_u32(out, static_cast<std::uint32_t>(t.rank()));
    for (auto e : t.shape()) put_u32(out, static_cast<std::uint32_t>(e));
    for (double v : t.data()) put_u32(out, std::bit_cast<std::uint32_t>(static_cast<float>(v)));
  }
  put_u64(out, out.size());
  return out;
}

std::vector<NamedTensor> decode_checkpoint(std::string_view bytes) {
  if (bytes.size() < kMagic.size() + 8 || bytes.substr(0, kMagic.size()) != kMagic) {
    throw FormatError("not a MADV1 checkpoint");
  }
  const std::size_t body = bytes.size() - 8;
  Reader trailer(bytes.substr(body), 8);
  const std::uint64_t recorded = trailer.uint(8);
  if (recorded != body) {
    throw FormatError("checkpoint checksum mismatch: trailer records " + std::to_string(recorded) +
                      " bytes, found " + std::to_string(body));
  }
  Reader r(bytes, body);
  r.take(kMagic.size());
  std::vector<NamedTensor> out;
  while (!r.done()) {
    const auto name_len = static_cast<std::size_t>(r.uint(4));
    std::string name(r.take(name_len));
    const auto rank = static_cast<std::size_t>(r.uint(4));
    Shape shape;
    for (std::size_t k = 0; k < rank; ++k) shape.push_back(static_cast<std::size_t>(r.uint(4)));
    for (auto e : shape) {
      if (e == 0) throw FormatError("checkpoint entry '" + name + "' has a zero extent");
    }
    std::vector<double> values(numel(shape));
    for (auto& v : values) v = static_cast<double>(std::bit_cast<float>(static_cast<std::uint32_t>(r.uint(4))));
    out.push_back({std::move(name), Tensor(std::move(shape), std::move(values))});
  }
  return out;
}

void save_checkpoint(const std::filesystem::path& path, const std::vector<NamedTensor>& tensors) {
  write_file_atomic(path, encode_checkpoint(tensors));
}

std::vector<NamedTensor> load_checkpoint(const std::filesystem::path& path) { return decode_checkpoint(read_file(path)); }

Tensor quantize_f32(const Tensor& t) {
  Tensor out = t.detach();
  for (auto& v : out.data()) v = static_cast<double>(static_cast<float>(v));
  return out;
}

}  // namespace madv::io
