// SPDX-FileCopyrightText: © 2026 swinfx contributors
//
// SPDX-License-Identifier: Apache-2.0

#pragma once

// Q6.10 fixed-point scalar and the MAC accumulator every kernel builds on.
//
// A value is raw / 2^10 with raw a 16-bit two's-complement integer, so the
// representable range is [-32, 32 - 2^-10] in steps of 2^-10. Every
// operation saturates; nothing wraps.

#include <algorithm>
#include <compare>
#include <cstdint>
#include <iosfwd>
#include <limits>

namespace swinfx {

class Fx16 {
 public:
  static constexpr int kFracBits = 10;
  static constexpr std::int32_t kOneRaw = 1 << kFracBits;
  static constexpr std::int16_t kRawMax = std::numeric_limits<std::int16_t>::max();
  static constexpr std::int16_t kRawMin = std::numeric_limits<std::int16_t>::min();

  constexpr Fx16() = default;

  static constexpr Fx16 from_raw(std::int16_t raw) { return Fx16(raw); }

  // Clamps any wide integer at the Q6.10 scale into range.
  static constexpr Fx16 saturate(std::int64_t raw) {
    return Fx16(static_cast<std::int16_t>(std::clamp<std::int64_t>(raw, kRawMin, kRawMax)));
  }

  // Nearest grid point, ties toward +inf, saturated. Throws DomainError on NaN/inf.
  static Fx16 from_real(double v);
  // Same rounding, but throws DomainError when v lies outside the representable range.
  static Fx16 from_real_strict(double v);

  static constexpr Fx16 zero() { return Fx16(0); }
  static constexpr Fx16 one() { return Fx16(static_cast<std::int16_t>(kOneRaw)); }
  static constexpr Fx16 max() { return Fx16(kRawMax); }
  static constexpr Fx16 min() { return Fx16(kRawMin); }
  static constexpr Fx16 from_int(int v) { return saturate(static_cast<std::int64_t>(v) * kOneRaw); }

  constexpr std::int16_t raw() const { return raw_; }
  constexpr double to_real() const { return static_cast<double>(raw_) / kOneRaw; }

  // Integer part (floor) and the 10-bit fraction; x = int_part + frac / 1024.
  constexpr int int_part() const { return raw_ >> kFracBits; }
  constexpr unsigned frac_bits() const { return static_cast<unsigned>(raw_) & (kOneRaw - 1); }

  friend constexpr auto operator<=>(Fx16, Fx16) = default;

 private:
  constexpr explicit Fx16(std::int16_t raw) : raw_(raw) {}
  std::int16_t raw_ = 0;
};

std::ostream& operator<<(std::ostream& os, Fx16 v);

constexpr Fx16 add_sat(Fx16 a, Fx16 b) {
  return Fx16::saturate(std::int64_t{a.raw()} + b.raw());
}

constexpr Fx16 sub_sat(Fx16 a, Fx16 b) {
  return Fx16::saturate(std::int64_t{a.raw()} - b.raw());
}

constexpr Fx16 neg_sat(Fx16 a) { return Fx16::saturate(-std::int64_t{a.raw()}); }

constexpr Fx16 abs_sat(Fx16 a) { return a.raw() < 0 ? neg_sat(a) : a; }

// Round-half-up of an integer carrying `bits` extra fractional bits.
constexpr std::int64_t round_shift(std::int64_t v, int bits) {
  return bits == 0 ? v : (v + (std::int64_t{1} << (bits - 1))) >> bits;
}

// One DSP multiply: exact 2^-20 product, round-half-up back to 2^-10, saturate.
constexpr Fx16 mul(Fx16 a, Fx16 b) {
  return Fx16::saturate(round_shift(std::int64_t{a.raw()} * b.raw(), Fx16::kFracBits));
}

// Barrel shift by k in [-15, 15]: left saturates, right is arithmetic (floor).
constexpr Fx16 shift(Fx16 a, int k) {
  if (k >= 0) return Fx16::saturate(std::int64_t{a.raw()} << k);
  return Fx16::from_raw(static_cast<std::int16_t>(a.raw() >> (-k)));
}

// Wide multiply-accumulate register at scale 2^-20, modelled on the 48-bit
// DSP48 accumulator. 1024 worst-case products (2^30 each) need 41 bits, so the
// 48-bit register never clips on any dot product the MMU issues.
class Acc48 {
 public:
  static constexpr int kBits = 48;
  static constexpr std::int64_t kMax = (std::int64_t{1} << (kBits - 1)) - 1;
  static constexpr std::int64_t kMin = -(std::int64_t{1} << (kBits - 1));

  constexpr Acc48() = default;

  constexpr void add_product(Fx16 a, Fx16 b) { add_raw(std::int64_t{a.raw()} * b.raw()); }

  // Bias enters the accumulation buffer aligned to the product scale.
  constexpr void add_bias(Fx16 b) { add_raw(std::int64_t{b.raw()} << Fx16::kFracBits); }

  constexpr void add_raw(std::int64_t v) { raw_ = std::clamp<std::int64_t>(raw_ + v, kMin, kMax); }

  constexpr std::int64_t raw() const { return raw_; }

  // Round-half-up to Q6.10, then saturate.
  constexpr Fx16 fold() const { return Fx16::saturate(round_shift(raw_, Fx16::kFracBits)); }

 private:
  std::int64_t raw_ = 0;
};

}  // namespace swinfx
