#pragma once

#include <bit>
#include <cstdint>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "xferlab/util/error.hpp"
#include "xferlab/util/hash.hpp"

namespace xferlab {

// Little-endian byte sink backing the binary containers.
class BinaryWriter {
 public:
  void raw(std::string_view s) { buf_.append(s); }

  void u32(std::uint32_t v) {
    for (int i = 0; i < 4; ++i) buf_.push_back(static_cast<char>((v >> (8 * i)) & 0xff));
  }

  void u64(std::uint64_t v) {
    for (int i = 0; i < 8; ++i) buf_.push_back(static_cast<char>((v >> (8 * i)) & 0xff));
  }

  void u8(std::uint8_t v) { buf_.push_back(static_cast<char>(v)); }

  void f64(double v) { u64(std::bit_cast<std::uint64_t>(v)); }

  void str(std::string_view s) {
    u64(s.size());
    buf_.append(s);
  }

  void doubles(std::span<const double> values) {
    for (double v : values) f64(v);
  }

  // Appends the FNV-1a digest of everything written so far.
  void seal() { u64(Fnv1a().bytes(buf_.data(), buf_.size()).digest()); }

  const std::string& bytes() const { return buf_; }

 private:
  std::string buf_;
};

class BinaryReader {
 public:
  BinaryReader(std::string_view data, std::string context)
      : data_(data), context_(std::move(context)) {}

  std::string_view raw(std::size_t n) {
    need(n);
    auto out = data_.substr(pos_, n);
    pos_ += n;
    return out;
  }

  std::uint8_t u8() { return static_cast<std::uint8_t>(raw(1)[0]); }

  std::uint32_t u32() {
    auto s = raw(4);
    std::uint32_t v = 0;
    for (int i = 0; i < 4; ++i) v |= std::uint32_t(static_cast<unsigned char>(s[i])) << (8 * i);
    return v;
  }

  std::uint64_t u64() {
    auto s = raw(8);
    std::uint64_t v = 0;
    for (int i = 0; i < 8; ++i) v |= std::uint64_t(static_cast<unsigned char>(s[i])) << (8 * i);
    return v;
  }

  double f64() { return std::bit_cast<double>(u64()); }

  std::string str(std::size_t max_len = 1 << 20) {
    auto n = u64();
    if (n > max_len) throw FormatError(context_ + ": string length " + std::to_string(n) + " too large");
    return std::string(raw(n));
  }

  std::vector<double> doubles(std::size_t n) {
    need(n * 8);
    std::vector<double> out(n);
    for (auto& v : out) v = f64();
    return out;
  }

  std::size_t remaining() const { return data_.size() - pos_; }

  const std::string& context() const { return context_; }

 private:
  void need(std::size_t n) const {
    if (n > data_.size() - pos_) {
      throw FormatError(context_ + ": truncated payload (need " + std::to_string(n) +
                        " bytes at offset " + std::to_string(pos_) + ")");
    }
  }

  std::string_view data_;
  std::size_t pos_ = 0;
  std::string context_;
};

// Verifies the trailing checksum and returns the payload without it.
inline std::string_view verify_sealed(std::string_view data, const std::string& context) {
  if (data.size() < 8) throw FormatError(context + ": file too short");
  auto payload = data.substr(0, data.size() - 8);
  BinaryReader tail(data.substr(data.size() - 8), context);
  auto stored = tail.u64();
  auto actual = Fnv1a().bytes(payload.data(), payload.size()).digest();
  if (stored != actual) {
    throw FormatError(context + ": checksum mismatch (stored " + hex64(stored) + ", computed " +
                      hex64(actual) + ")");
  }
  return payload;
}

inline std::string read_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw FilesystemError("cannot open " + path.string());
  std::string out((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
  return out;
}

inline void make_directories(const std::filesystem::path& dir) {
  std::error_code ec;
  std::filesystem::create_directories(dir, ec);
  if (ec) throw FilesystemError("cannot create directory " + dir.string() + ": " + ec.message());
}

// Writes through a temporary file and renames, so readers never see a
// partially written artifact. A file that already holds `content` is left
// untouched, keeping its modification time.
inline void write_file(const std::filesystem::path& path, std::string_view content) {
  std::error_code ec;
  if (std::filesystem::is_regular_file(path, ec) && std::filesystem::file_size(path, ec) == content.size() &&
      !ec) {
    std::ifstream in(path, std::ios::binary);
    std::string existing((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
    if (in.good() || in.eof()) {
      if (existing == content) return;
    }
  }
  ec.clear();
  if (path.has_parent_path()) make_directories(path.parent_path());
  auto tmp = path;
  tmp += ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw FilesystemError("cannot write " + tmp.string());
    out.write(content.data(), static_cast<std::streamsize>(content.size()));
    if (!out) throw FilesystemError("short write to " + tmp.string());
  }
  std::filesystem::rename(tmp, path, ec);
  if (ec) throw FilesystemError("cannot rename " + tmp.string() + " to " + path.string() + ": " + ec.message());
}

}  // namespace xferlab
