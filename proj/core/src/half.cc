#include "driftscope/half.h"

#include <bit>
#include <cmath>
#include <limits>

#include "driftscope/error.h"

namespace driftscope {
namespace {

// Shifts `m` right by `shift` bits rounding to nearest, ties to even.
uint64_t RoundShift(uint64_t m, int shift) {
  if (shift <= 0) return m << -shift;
  if (shift >= 64) return 0;
  const uint64_t q = m >> shift;
  const uint64_t r = m & ((uint64_t{1} << shift) - 1);
  const uint64_t halfway = uint64_t{1} << (shift - 1);
  if (r > halfway || (r == halfway && (q & 1))) return q + 1;
  return q;
}

}  // namespace

uint16_t DoubleToHalf(double value) {
  const auto bits = std::bit_cast<uint64_t>(value);
  const auto sign = static_cast<uint16_t>((bits >> 48) & 0x8000);
  const int exponent = static_cast<int>((bits >> 52) & 0x7FF);
  const uint64_t fraction = bits & ((uint64_t{1} << 52) - 1);

  if (exponent == 0x7FF) {
    return fraction != 0 ? static_cast<uint16_t>(sign | 0x7E00) : static_cast<uint16_t>(sign | 0x7C00);
  }
  // Double subnormals are far below the half range.
  if (exponent == 0) return sign;

  const uint64_t significand = fraction | (uint64_t{1} << 52);
  const int half_exponent = exponent - 1023 + 15;
  if (half_exponent >= 31) return static_cast<uint16_t>(sign | 0x7C00);

  uint64_t magnitude;
  if (half_exponent >= 1) {
    // Carry out of the 11-bit significand bumps the exponent, which is the
    // correct encoding (and yields infinity past the max finite value).
    magnitude = static_cast<uint64_t>(half_exponent - 1) * 1024 + RoundShift(significand, 42);
  } else {
    magnitude = RoundShift(significand, 42 + 1 - half_exponent);
  }
  if (magnitude >= 0x7C00) return static_cast<uint16_t>(sign | 0x7C00);
  return static_cast<uint16_t>(sign | magnitude);
}

double HalfToDouble(uint16_t bits) {
  const bool negative = (bits & 0x8000) != 0;
  const int exponent = (bits >> 10) & 0x1F;
  const int fraction = bits & 0x3FF;
  double magnitude;
  if (exponent == 0) {
    magnitude = std::ldexp(static_cast<double>(fraction), -24);
  } else if (exponent == 31) {
    magnitude = fraction != 0 ? std::numeric_limits<double>::quiet_NaN()
                              : std::numeric_limits<double>::infinity();
  } else {
    magnitude = std::ldexp(static_cast<double>(1024 + fraction), exponent - 25);
  }
  return negative ? -magnitude : magnitude;
}

std::vector<uint64_t> EncodeEmbedding(std::span<const double> values) {
  if (values.size() % 4 != 0) {
    throw ConfigError("encoded embedding length must be a multiple of 4");
  }
  std::vector<uint64_t> words(values.size() / 4, 0);
  for (size_t i = 0; i < values.size(); ++i) {
    words[i / 4] |= static_cast<uint64_t>(DoubleToHalf(values[i])) << (16 * (i % 4));
  }
  return words;
}

std::vector<double> DecodeEncodedEmbedding(std::span<const uint64_t> encoded) {
  std::vector<double> values(encoded.size() * 4);
  for (size_t i = 0; i < values.size(); ++i) {
    values[i] = HalfToDouble(static_cast<uint16_t>(encoded[i / 4] >> (16 * (i % 4))));
  }
  return values;
}

}  // namespace driftscope
