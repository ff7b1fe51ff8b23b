#include "pdmc/bitio.hpp"

#include "pdmc/error.hpp"

namespace pdmc {

void BitWriter::put(std::uint64_t value, int bits) {
  if (bits < 0 || bits > 64) throw InvalidArgument("bit count out of range");
  if (bits < 64 && (value >> bits) != 0) throw InvalidArgument("value does not fit in bit field");
  for (int i = bits - 1; i >= 0; --i) {
    if (bits_ % 8 == 0) bytes_.push_back(0);
    if ((value >> i) & 1U) bytes_.back() |= static_cast<std::uint8_t>(0x80U >> (bits_ % 8));
    ++bits_;
  }
}

std::vector<std::uint8_t> BitWriter::finish() {
  bits_ = 0;
  return std::move(bytes_);
}

std::uint64_t BitReader::get(int bits) {
  if (bits < 0 || bits > 64) throw InvalidArgument("bit count out of range");
  if (static_cast<std::size_t>(bits) > remaining()) throw DecodeError("bitstream truncated");
  std::uint64_t v = 0;
  for (int i = 0; i < bits; ++i) {
    const std::uint8_t byte = bytes_[pos_ / 8];
    v = (v << 1) | ((byte >> (7 - pos_ % 8)) & 1U);
    ++pos_;
  }
  return v;
}

void BitReader::expect_zero_padding() {
  if (remaining() >= 8) throw DecodeError("trailing data in bit-packed section");
  if (get(static_cast<int>(remaining())) != 0) throw DecodeError("non-zero padding bits");
}

void ByteWriter::u16(std::uint16_t v) {
  u8(static_cast<std::uint8_t>(v & 0xFF));
  u8(static_cast<std::uint8_t>(v >> 8));
}

void ByteWriter::u32(std::uint32_t v) {
  for (int i = 0; i < 4; ++i) u8(static_cast<std::uint8_t>((v >> (8 * i)) & 0xFF));
}

void ByteWriter::varint(std::uint64_t v) {
  do {
    std::uint8_t b = v & 0x7F;
    v >>= 7;
    if (v != 0) b |= 0x80;
    u8(b);
  } while (v != 0);
}

std::uint8_t ByteReader::u8() {
  if (pos_ >= bytes_.size()) throw DecodeError("stream truncated");
  return bytes_[pos_++];
}

std::uint16_t ByteReader::u16() {
  const std::uint16_t lo = u8();
  const std::uint16_t hi = u8();
  return static_cast<std::uint16_t>(lo | (hi << 8));
}

std::uint32_t ByteReader::u32() {
  std::uint32_t v = 0;
  for (int i = 0; i < 4; ++i) v |= static_cast<std::uint32_t>(u8()) << (8 * i);
  return v;
}

std::uint64_t ByteReader::varint() {
  std::uint64_t v = 0;
  for (int shift = 0; shift < 64; shift += 7) {
    const std::uint8_t b = u8();
    v |= static_cast<std::uint64_t>(b & 0x7F) << shift;
    if ((b & 0x80) == 0) {
      // Reject non-minimal encodings so every value has one representation.
      if (b == 0 && shift != 0) throw DecodeError("non-minimal varint");
      return v;
    }
  }
  throw DecodeError("varint too long");
}

std::span<const std::uint8_t> ByteReader::take(std::size_t n) {
  if (n > remaining()) throw DecodeError("stream truncated");
  auto s = bytes_.subspan(pos_, n);
  pos_ += n;
  return s;
}

}  // namespace pdmc
