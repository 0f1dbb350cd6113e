#pragma once

#include <cstdint>
#include <span>
#include <vector>

namespace driftscope {

// IEEE 754 binary16 conversion, round-to-nearest-even. Overflow rounds to
// infinity; NaN payloads are preserved as quiet NaN.
uint16_t DoubleToHalf(double value);
double HalfToDouble(uint16_t bits);

// Rounds a value to the nearest representable half-precision value.
inline double QuantizeHalf(double value) { return HalfToDouble(DoubleToHalf(value)); }

// Packs four half-precision lanes per 64-bit word. Element 4*i + k lives in
// bits [16k, 16k + 16) of word i. values.size() must be a multiple of 4.
std::vector<uint64_t> EncodeEmbedding(std::span<const double> values);

// Inverse of EncodeEmbedding. Output length is 4 * encoded.size(). Lanes
// holding infinity or NaN bit patterns decode to those values.
std::vector<double> DecodeEncodedEmbedding(std::span<const uint64_t> encoded);

}  // namespace driftscope
