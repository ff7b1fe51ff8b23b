#pragma once

#include <cstdint>
#include <span>
#include <vector>

namespace pdmc {

/// MSB-first bit packer.
class BitWriter {
 public:
  void put(std::uint64_t value, int bits);
  void put_bit(bool bit) { put(bit ? 1 : 0, 1); }
  /// Bits written so far.
  std::size_t bit_count() const { return bits_; }
  /// Pads the last byte with zeros and returns the buffer.
  std::vector<std::uint8_t> finish();

 private:
  std::vector<std::uint8_t> bytes_;
  std::size_t bits_ = 0;
};

/// MSB-first bit reader over a byte span. Reading past the end throws DecodeError.
class BitReader {
 public:
  explicit BitReader(std::span<const std::uint8_t> bytes) : bytes_(bytes) {}

  std::uint64_t get(int bits);
  bool get_bit() { return get(1) != 0; }
  std::size_t remaining() const { return bytes_.size() * 8 - pos_; }
  std::size_t position() const { return pos_; }
  /// Throws DecodeError unless fewer than 8 bits remain and all are zero.
  void expect_zero_padding();

 private:
  std::span<const std::uint8_t> bytes_;
  std::size_t pos_ = 0;
};

/// Byte-level little-endian writer with LEB128 varints.
class ByteWriter {
 public:
  void u8(std::uint8_t v) { bytes_.push_back(v); }
  void u16(std::uint16_t v);
  void u32(std::uint32_t v);
  void varint(std::uint64_t v);
  void append(std::span<const std::uint8_t> data) { bytes_.insert(bytes_.end(), data.begin(), data.end()); }
  std::size_t size() const { return bytes_.size(); }
  const std::vector<std::uint8_t>& bytes() const { return bytes_; }
  std::vector<std::uint8_t> take() { return std::move(bytes_); }

 private:
  std::vector<std::uint8_t> bytes_;
};

/// Byte-level reader; every read past the end throws DecodeError.
class ByteReader {
 public:
  explicit ByteReader(std::span<const std::uint8_t> bytes) : bytes_(bytes) {}

  std::uint8_t u8();
  std::uint16_t u16();
  std::uint32_t u32();
  std::uint64_t varint();
  std::span<const std::uint8_t> take(std::size_t n);
  std::size_t remaining() const { return bytes_.size() - pos_; }
  std::size_t position() const { return pos_; }

 private:
  std::span<const std::uint8_t> bytes_;
  std::size_t pos_ = 0;
};

}  // namespace pdmc
