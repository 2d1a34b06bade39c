#pragma once

#include <cstdint>
#include <vector>

#include "pimgemv/config.hpp"

namespace pimgemv {

// Element values are carried as doubles throughout: integer formats keep
// exactly integral values (exact up to 2^53, far beyond any fit-checked
// output), bfloat16 carries the dequantized value. Packing converts to the
// little-endian wire layout used by placement buffers and bank memory.
using ElemVec = std::vector<double>;

// Integer: value must already be integral and in range (throws otherwise).
// bfloat16: round-to-nearest-even truncation to an 8-bit mantissa.
double quantize(double v, const DataFormat& fmt);

// Signed range of an integer format, e.g. [-8, 7] for 4 bits.
std::int64_t format_min(int bits);
std::int64_t format_max(int bits);

// Packed byte size of n elements (4-bit packs two per byte, low nibble first).
std::int64_t packed_bytes(std::int64_t n, int bits);

// Pack/unpack whole vectors.
std::vector<std::uint8_t> pack_elements(const ElemVec& v, const DataFormat& fmt);
ElemVec unpack_elements(const std::uint8_t* bytes, std::int64_t count, const DataFormat& fmt);

// Random access into a packed element buffer (index in elements).
double decode_element(const std::uint8_t* bytes, std::int64_t index, const DataFormat& fmt);
void encode_element(std::uint8_t* bytes, std::int64_t index, double v, const DataFormat& fmt);

// Scale factors: signed integer at sf_bits (8/16/32), or float32 when the
// element format is float and sf_bits is 32. Same little-endian layout.
double decode_sf(const std::uint8_t* bytes, std::int64_t index, int sf_bits, bool is_float);
void encode_sf(std::uint8_t* bytes, std::int64_t index, double v, int sf_bits, bool is_float);

// bfloat16 helpers (value <-> 16-bit pattern).
std::uint16_t bf16_from_double(double v);
double bf16_to_double(std::uint16_t bits);

}  // namespace pimgemv
