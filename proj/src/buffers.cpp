#include "pimgemv/buffers.hpp"

#include <bit>
#include <cmath>
#include <cstring>

namespace pimgemv {

std::int64_t format_min(int bits) { return -(std::int64_t{1} << (bits - 1)); }
std::int64_t format_max(int bits) { return (std::int64_t{1} << (bits - 1)) - 1; }

std::uint16_t bf16_from_double(double v) {
  const float f = static_cast<float>(v);
  std::uint32_t u = std::bit_cast<std::uint32_t>(f);
  // Round to nearest even on the dropped 16 bits.
  const std::uint32_t rounding = 0x7fffu + ((u >> 16) & 1u);
  u += rounding;
  return static_cast<std::uint16_t>(u >> 16);
}

double bf16_to_double(std::uint16_t bits) {
  const std::uint32_t u = static_cast<std::uint32_t>(bits) << 16;
  return static_cast<double>(std::bit_cast<float>(u));
}

double quantize(double v, const DataFormat& fmt) {
  if (fmt.is_float) return bf16_to_double(bf16_from_double(v));
  if (v != std::floor(v))
    throw ConfigError("integer format given a non-integral value");
  if (v < static_cast<double>(format_min(fmt.bits)) ||
      v > static_cast<double>(format_max(fmt.bits)))
    throw ConfigError("value out of range for integer format");
  return v;
}

std::int64_t packed_bytes(std::int64_t n, int bits) {
  return (n * bits + 7) / 8;
}

namespace {

void encode_int(std::uint8_t* bytes, std::int64_t index, std::int64_t v, int bits) {
  if (bits == 4) {
    const std::uint8_t nib = static_cast<std::uint8_t>(v & 0xf);
    std::uint8_t& b = bytes[index / 2];
    if (index % 2 == 0)
      b = static_cast<std::uint8_t>((b & 0xf0) | nib);
    else
      b = static_cast<std::uint8_t>((b & 0x0f) | (nib << 4));
  } else if (bits == 8) {
    bytes[index] = static_cast<std::uint8_t>(v & 0xff);
  } else if (bits == 16) {
    bytes[index * 2] = static_cast<std::uint8_t>(v & 0xff);
    bytes[index * 2 + 1] = static_cast<std::uint8_t>((v >> 8) & 0xff);
  } else if (bits == 32) {
    for (int i = 0; i < 4; ++i)
      bytes[index * 4 + i] = static_cast<std::uint8_t>((v >> (8 * i)) & 0xff);
  }
}

std::int64_t decode_int(const std::uint8_t* bytes, std::int64_t index, int bits) {
  if (bits == 4) {
    const std::uint8_t b = bytes[index / 2];
    const std::uint8_t nib = (index % 2 == 0) ? (b & 0x0f) : (b >> 4);
    return (nib & 0x8) ? static_cast<std::int64_t>(nib) - 16 : nib;
  }
  if (bits == 8) return static_cast<std::int8_t>(bytes[index]);
  if (bits == 16) {
    const std::uint16_t u = static_cast<std::uint16_t>(bytes[index * 2]) |
                            (static_cast<std::uint16_t>(bytes[index * 2 + 1]) << 8);
    return static_cast<std::int16_t>(u);
  }
  std::uint32_t u = 0;
  for (int i = 0; i < 4; ++i)
    u |= static_cast<std::uint32_t>(bytes[index * 4 + i]) << (8 * i);
  return static_cast<std::int32_t>(u);
}

}  // namespace

void encode_element(std::uint8_t* bytes, std::int64_t index, double v, const DataFormat& fmt) {
  if (fmt.is_float) {
    const std::uint16_t b = bf16_from_double(v);
    bytes[index * 2] = static_cast<std::uint8_t>(b & 0xff);
    bytes[index * 2 + 1] = static_cast<std::uint8_t>(b >> 8);
    return;
  }
  encode_int(bytes, index, static_cast<std::int64_t>(v), fmt.bits);
}

double decode_element(const std::uint8_t* bytes, std::int64_t index, const DataFormat& fmt) {
  if (fmt.is_float) {
    const std::uint16_t b = static_cast<std::uint16_t>(bytes[index * 2]) |
                            (static_cast<std::uint16_t>(bytes[index * 2 + 1]) << 8);
    return bf16_to_double(b);
  }
  return static_cast<double>(decode_int(bytes, index, fmt.bits));
}

std::vector<std::uint8_t> pack_elements(const ElemVec& v, const DataFormat& fmt) {
  std::vector<std::uint8_t> out(packed_bytes(static_cast<std::int64_t>(v.size()), fmt.bits), 0);
  for (std::int64_t i = 0; i < static_cast<std::int64_t>(v.size()); ++i)
    encode_element(out.data(), i, v[static_cast<std::size_t>(i)], fmt);
  return out;
}

ElemVec unpack_elements(const std::uint8_t* bytes, std::int64_t count, const DataFormat& fmt) {
  ElemVec out(static_cast<std::size_t>(count));
  for (std::int64_t i = 0; i < count; ++i)
    out[static_cast<std::size_t>(i)] = decode_element(bytes, i, fmt);
  return out;
}

void encode_sf(std::uint8_t* bytes, std::int64_t index, double v, int sf_bits, bool is_float) {
  if (is_float && sf_bits == 32) {
    const float f = static_cast<float>(v);
    std::uint32_t u = std::bit_cast<std::uint32_t>(f);
    for (int i = 0; i < 4; ++i)
      bytes[index * 4 + i] = static_cast<std::uint8_t>((u >> (8 * i)) & 0xff);
    return;
  }
  if (is_float && sf_bits == 16) {
    const std::uint16_t b = bf16_from_double(v);
    bytes[index * 2] = static_cast<std::uint8_t>(b & 0xff);
    bytes[index * 2 + 1] = static_cast<std::uint8_t>(b >> 8);
    return;
  }
  encode_int(bytes, index, static_cast<std::int64_t>(v), sf_bits);
}

double decode_sf(const std::uint8_t* bytes, std::int64_t index, int sf_bits, bool is_float) {
  if (is_float && sf_bits == 32) {
    std::uint32_t u = 0;
    for (int i = 0; i < 4; ++i)
      u |= static_cast<std::uint32_t>(bytes[index * 4 + i]) << (8 * i);
    return static_cast<double>(std::bit_cast<float>(u));
  }
  if (is_float && sf_bits == 16) {
    const std::uint16_t b = static_cast<std::uint16_t>(bytes[index * 2]) |
                            (static_cast<std::uint16_t>(bytes[index * 2 + 1]) << 8);
    return bf16_to_double(b);
  }
  return static_cast<double>(decode_int(bytes, index, sf_bits));
}

}  // namespace pimgemv
