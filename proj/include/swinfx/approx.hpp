// SPDX-FileCopyrightText: © 2026 swinfx contributors
//
// SPDX-License-Identifier: Apache-2.0

#pragma once

// Shift-add and table-driven approximation primitives shared by the softmax
// and GELU units: the log2(e) constant multiplier, the piecewise-linear
// base-2 exponential (EU), the leading-one detector and the division-exponent
// unit built on it (DU), and the grouped tree max finder (FMU).

#include <array>
#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <string_view>

#include "swinfx/fxp.hpp"

namespace swinfx::approx {

// Eight (slope, intercept) pairs approximating 2^t on [0, 1). The segment of
// a 10-bit fraction is its top three bits.
class SegmentTable {
 public:
  static constexpr int kSegments = 8;
  static constexpr int kSegmentShift = 7;

  // Throws DomainError unless every evaluation lies in [1, 2) and the table
  // is nondecreasing across all 1024 fractions.
  SegmentTable(const std::array<Fx16, kSegments>& slopes, const std::array<Fx16, kSegments>& intercepts);

  // Per segment: Chebyshev line through 2^t, rounded to Q6.10, then refined
  // over a +-4 ulp neighbourhood to minimise the max relative error on the
  // 128 grid points actually evaluated. Segment 0 is pinned to 2^0 = 1
  // exactly so integer exponents stay exact.
  static SegmentTable fit();

  // The fitted table, computed once.
  static const SegmentTable& standard();

  Fx16 eval(unsigned frac) const;
  Fx16 slope(int segment) const { return slopes_.at(segment); }
  Fx16 intercept(int segment) const { return intercepts_.at(segment); }

  // Eight lines of "k_raw b_raw".
  std::string to_text() const;
  static SegmentTable from_text(std::string_view text);
  void save(const std::filesystem::path& path) const;
  static SegmentTable load(const std::filesystem::path& path);

  friend bool operator==(const SegmentTable&, const SegmentTable&) = default;

 private:
  std::array<Fx16, kSegments> slopes_;
  std::array<Fx16, kSegments> intercepts_;
};

// x * 1.0111b = x + (x >> 1) - (x >> 4).
Fx16 mul_log2e(Fx16 x);

// 2^(frac / 1024) for frac in [0, 1024).
Fx16 exp2_frac(unsigned frac, const SegmentTable& table = SegmentTable::standard());

// 2^x as 2^frac(x) << int(x), floor split. int(x) > 4 saturates to Fx16::max(),
// int(x) < -15 returns 0.
Fx16 exp2(Fx16 x, const SegmentTable& table = SegmentTable::standard());

inline constexpr int kExp2MinInt = -15;
inline constexpr int kExp2MaxInt = 4;

// Leading-one decomposition value = m * 2^w with m in [1, 2). The mantissa
// keeps 15 fractional bits (the LOD output bus), so any Q6.10 input is
// reconstructed exactly.
struct LodResult {
  static constexpr int kMantissaBits = 15;

  int w = 0;
  std::uint16_t m_q15 = 0;  // m * 2^15, in [2^15, 2^16)

  double mantissa() const { return static_cast<double>(m_q15) / (1 << kMantissaBits); }
  Fx16 mantissa_fx() const;
  // (m - 1) + w at scale 2^-15: the linear log2 approximation of the value.
  std::int64_t log2_approx_q15() const;
};

// Throws DomainError when f <= 0.
LodResult lod(Fx16 f);
// Same detector over a wider bus: raw is a positive integer at scale 2^-10
// (e.g. an unsaturated adder-tree sum). Bits below the 15-bit mantissa are
// truncated.
LodResult lod_wide(std::int64_t raw_q10);

// (m1 + w1) - (m2 + w2) for numerator f1 and denominator f2 (or f2 + 1 when
// add_one_to_denominator), rounded to Q6.10. exp2 of the result approximates
// f1 / f2. Throws DomainError on a nonpositive numerator or denominator.
Fx16 div_exponent(Fx16 f1, Fx16 f2, bool add_one_to_denominator);
Fx16 div_exponent_wide(Fx16 f1, std::int64_t f2_raw_q10, bool add_one_to_denominator);

struct MaxResult {
  Fx16 value;
  std::size_t index = 0;  // lowest index among ties
  int cycles = 0;
};

// Grouped comparator tree. Value is exact; cycles follows fmu_cycles.
// Throws DomainError on empty input.
MaxResult find_max(std::span<const Fx16> v);

// Latency of the grouped tree: n splits into descending power-of-two groups,
// each reduced in log2(size) cycles; finished partial maxima then merge
// pairwise earliest-first, one cycle per merge. fmu_cycles(49) == 6.
int fmu_cycles(std::size_t n);

}  // namespace swinfx::approx
