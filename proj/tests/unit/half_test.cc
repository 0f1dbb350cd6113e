#include "driftscope/half.h"

#include <bit>
#include <cmath>
#include <cstring>
#include <limits>

#include <gtest/gtest.h>

namespace driftscope {
namespace {

// Reference decode straight from the binary16 definition.
double ReferenceDecode(uint16_t h) {
  const int sign = h >> 15;
  const int exponent = (h >> 10) & 0x1f;
  const int mantissa = h & 0x3ff;
  double magnitude;
  if (exponent == 0) {
    magnitude = std::ldexp(mantissa, -24);
  } else if (exponent == 31) {
    magnitude = mantissa == 0 ? std::numeric_limits<double>::infinity() : std::numeric_limits<double>::quiet_NaN();
  } else {
    magnitude = std::ldexp(1024 + mantissa, exponent - 25);
  }
  return sign ? -magnitude : magnitude;
}

TEST(Half, DecodeMatchesReferenceForAllPatterns) {
  for (uint32_t h = 0; h < 65536; ++h) {
    const double expected = ReferenceDecode(static_cast<uint16_t>(h));
    const double got = HalfToDouble(static_cast<uint16_t>(h));
    if (std::isnan(expected)) {
      EXPECT_TRUE(std::isnan(got)) << h;
    } else {
      EXPECT_EQ(std::bit_cast<uint64_t>(got), std::bit_cast<uint64_t>(expected)) << h;
    }
  }
}

TEST(Half, EncodeRoundTripsEveryNonNanPattern) {
  for (uint32_t h = 0; h < 65536; ++h) {
    const double v = HalfToDouble(static_cast<uint16_t>(h));
    if (std::isnan(v)) {
      EXPECT_TRUE(std::isnan(HalfToDouble(DoubleToHalf(v))));
      continue;
    }
    EXPECT_EQ(DoubleToHalf(v), h) << h;
  }
}

TEST(Half, RoundsToNearestEven) {
  // Halfway between 1 and the next half (1 + 2^-10) rounds down to even.
  EXPECT_EQ(DoubleToHalf(1.0 + std::ldexp(1.0, -11)), 0x3c00);
  // Halfway between 1 + 2^-10 and 1 + 2^-9 rounds up to even.
  EXPECT_EQ(DoubleToHalf(1.0 + 3 * std::ldexp(1.0, -11)), 0x3c02);
  // Just above halfway rounds up.
  EXPECT_EQ(DoubleToHalf(1.0 + std::ldexp(1.0, -11) + 1e-12), 0x3c01);
}

TEST(Half, OverflowAndUnderflow) {
  EXPECT_EQ(DoubleToHalf(65504.0), 0x7bff);
  EXPECT_EQ(DoubleToHalf(65520.0), 0x7c00);
  EXPECT_EQ(DoubleToHalf(-1e10), 0xfc00);
  EXPECT_EQ(DoubleToHalf(std::ldexp(1.0, -26)), 0x0000);
  EXPECT_EQ(DoubleToHalf(std::ldexp(1.0, -25) * 1.5), 0x0001);
  EXPECT_EQ(DoubleToHalf(-0.0), 0x8000);
}

TEST(Half, QuantizeBetweenNeighbours) {
  for (double x : {0.1, -3.14159, 1000.3, 1e-3}) {
    const double q = QuantizeHalf(x);
    EXPECT_LE(std::abs(q - x), std::abs(x) * std::ldexp(1.0, -10));
  }
}

TEST(Half, EmbeddingPackingLayout) {
  const std::vector<double> values = {1.0, -2.0, 0.5, 0.0, 65504.0, -0.25, 3.0, 7.0};
  const auto words = EncodeEmbedding(values);
  ASSERT_EQ(words.size(), 2u);
  EXPECT_EQ(words[0] & 0xffff, DoubleToHalf(1.0));
  EXPECT_EQ((words[0] >> 16) & 0xffff, DoubleToHalf(-2.0));
  EXPECT_EQ((words[0] >> 32) & 0xffff, DoubleToHalf(0.5));
  EXPECT_EQ(words[0] >> 48, DoubleToHalf(0.0));
  EXPECT_EQ(DecodeEncodedEmbedding(words), values);
}

TEST(Half, EmbeddingRequiresMultipleOfFour) {
  const std::vector<double> values = {1.0, 2.0, 3.0};
  EXPECT_ANY_THROW(EncodeEmbedding(values));
}

}  // namespace
}  // namespace driftscope
