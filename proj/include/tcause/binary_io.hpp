#pragma once

#include <bit>
#include <cstdint>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <iterator>
#include <string>
#include <vector>

#include "tcause/error.hpp"
#include "tcause/format.hpp"

namespace tcause {

static_assert(std::endian::native == std::endian::little,
              "binary artifacts are written in little-endian byte order");

// Append-only little-endian buffer. The file layout is the buffer followed by
// an 8-byte FNV-1a digest of the buffer.
class ByteWriter {
 public:
  void u8(std::uint8_t v) { buf_.push_back(static_cast<char>(v)); }
  void u32(std::uint32_t v) { raw(&v, sizeof v); }
  void u64(std::uint64_t v) { raw(&v, sizeof v); }
  void f64(double v) { raw(&v, sizeof v); }
  void str(std::string_view s) {
    u32(static_cast<std::uint32_t>(s.size()));
    raw(s.data(), s.size());
  }
  void raw(const void* p, std::size_t n) {
    const auto* c = static_cast<const char*>(p);
    buf_.insert(buf_.end(), c, c + n);
  }

  const std::vector<char>& bytes() const { return buf_; }

  std::uint64_t digest() const {
    Fnv1a h;
    h.update(buf_.data(), buf_.size());
    return h.digest();
  }

  void save(const std::filesystem::path& path) const {
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) fail(ErrorCode::IoError, "cannot write " + path.string());
    const std::uint64_t d = digest();
    out.write(buf_.data(), static_cast<std::streamsize>(buf_.size()));
    out.write(reinterpret_cast<const char*>(&d), sizeof d);
    if (!out) fail(ErrorCode::IoError, "write failed: " + path.string());
  }

 private:
  std::vector<char> buf_;
};

class ByteReader {
 public:
  // Reads the whole file and verifies the trailing digest.
  static ByteReader open(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) fail(ErrorCode::IoError, "cannot open " + path.string());
    std::vector<char> data((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
    if (data.size() < sizeof(std::uint64_t)) {
      fail(ErrorCode::CorruptFile, path.string() + ": truncated");
    }
    std::uint64_t stored = 0;
    std::memcpy(&stored, data.data() + data.size() - sizeof stored, sizeof stored);
    data.resize(data.size() - sizeof stored);
    Fnv1a h;
    h.update(data.data(), data.size());
    if (h.digest() != stored) fail(ErrorCode::CorruptFile, path.string() + ": digest mismatch");
    return ByteReader(std::move(data), stored);
  }

  std::uint8_t u8() { std::uint8_t v; take(&v, 1); return v; }
  std::uint32_t u32() { std::uint32_t v; take(&v, sizeof v); return v; }
  std::uint64_t u64() { std::uint64_t v; take(&v, sizeof v); return v; }
  double f64() { double v; take(&v, sizeof v); return v; }
  std::string str() {
    const auto n = u32();
    if (n > remaining()) fail(ErrorCode::CorruptFile, "string length exceeds file");
    std::string s(data_.data() + pos_, n);
    pos_ += n;
    return s;
  }
  std::size_t remaining() const { return data_.size() - pos_; }
  std::uint64_t digest() const { return digest_; }

 private:
  ByteReader(std::vector<char> data, std::uint64_t digest)
      : data_(std::move(data)), digest_(digest) {}

  void take(void* p, std::size_t n) {
    if (n > remaining()) fail(ErrorCode::CorruptFile, "unexpected end of file");
    std::memcpy(p, data_.data() + pos_, n);
    pos_ += n;
  }

  std::vector<char> data_;
  std::size_t pos_ = 0;
  std::uint64_t digest_;
};

}  // namespace tcause
