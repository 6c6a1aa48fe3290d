#pragma once

// Little-endian primitives shared by the feature-file and checkpoint codecs.

#include <bit>
#include <cstdint>
#include <cstring>
#include <string>
#include <string_view>

#include "mospred/error.hpp"

namespace mospred::detail {

class ByteWriter {
 public:
  void bytes(std::string_view raw) { out_.append(raw); }

  void u8(std::uint8_t v) { out_.push_back(static_cast<char>(v)); }

  void u32(std::uint32_t v) {
    for (int i = 0; i < 4; ++i) {
      out_.push_back(static_cast<char>((v >> (8 * i)) & 0xffu));
    }
  }

  void u64(std::uint64_t v) {
    for (int i = 0; i < 8; ++i) {
      out_.push_back(static_cast<char>((v >> (8 * i)) & 0xffu));
    }
  }

  void f32(float v) { u32(std::bit_cast<std::uint32_t>(v)); }
  void f64(double v) { u64(std::bit_cast<std::uint64_t>(v)); }

  void str(std::string_view s) {
    u32(static_cast<std::uint32_t>(s.size()));
    bytes(s);
  }

  const std::string& buffer() const { return out_; }
  std::string take() { return std::move(out_); }

 private:
  std::string out_;
};

class ByteReader {
 public:
  ByteReader(std::string_view data, std::string what) : data_(data), what_(std::move(what)) {}

  std::uint64_t offset() const { return pos_; }
  std::uint64_t remaining() const { return data_.size() - pos_; }

  std::string_view bytes(std::size_t n) {
    need(n);
    auto view = data_.substr(pos_, n);
    pos_ += n;
    return view;
  }

  std::uint8_t u8() {
    need(1);
    return static_cast<std::uint8_t>(data_[pos_++]);
  }

  std::uint32_t u32() {
    need(4);
    std::uint32_t v = 0;
    for (int i = 0; i < 4; ++i) {
      v |= static_cast<std::uint32_t>(static_cast<unsigned char>(data_[pos_ + i])) << (8 * i);
    }
    pos_ += 4;
    return v;
  }

  std::uint64_t u64() {
    need(8);
    std::uint64_t v = 0;
    for (int i = 0; i < 8; ++i) {
      v |= static_cast<std::uint64_t>(static_cast<unsigned char>(data_[pos_ + i])) << (8 * i);
    }
    pos_ += 8;
    return v;
  }

  float f32() { return std::bit_cast<float>(u32()); }
  double f64() { return std::bit_cast<double>(u64()); }

  std::string str() {
    const auto n = u32();
    return std::string(bytes(n));
  }

  [[noreturn]] void fail(const std::string& message, std::uint64_t at) const {
    throw FormatError(what_ + ": " + message, at);
  }

 private:
  void need(std::size_t n) const {
    if (data_.size() - pos_ < n) {
      fail("truncated input, needed " + std::to_string(n) + " more bytes but only " +
               std::to_string(data_.size() - pos_) + " remain",
           data_.size());
    }
  }

  std::string_view data_;
  std::string what_;
  std::uint64_t pos_ = 0;
};

std::string read_whole_file(const std::string& path);
void write_whole_file(const std::string& path, std::string_view contents);

}  // namespace mospred::detail
