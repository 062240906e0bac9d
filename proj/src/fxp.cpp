// SPDX-FileCopyrightText: © 2026 swinfx contributors
//
// SPDX-License-Identifier: Apache-2.0

#include "swinfx/fxp.hpp"

#include <cmath>
#include <ostream>
#include <sstream>

#include "swinfx/error.hpp"

namespace swinfx {

namespace {

double scaled_round_half_up(double v) { return std::floor(v * Fx16::kOneRaw + 0.5); }

}  // namespace

Fx16 Fx16::from_real(double v) {
  if (!std::isfinite(v)) throw DomainError("Fx16::from_real: non-finite input");
  double r = scaled_round_half_up(v);
  r = std::clamp(r, static_cast<double>(kRawMin), static_cast<double>(kRawMax));
  return Fx16(static_cast<std::int16_t>(r));
}

Fx16 Fx16::from_real_strict(double v) {
  if (!std::isfinite(v)) throw DomainError("Fx16::from_real_strict: non-finite input");
  const double r = scaled_round_half_up(v);
  if (r < kRawMin || r > kRawMax) {
    std::ostringstream msg;
    msg << "Fx16::from_real_strict: " << v << " outside [-32, 32)";
    throw DomainError(msg.str());
  }
  return Fx16(static_cast<std::int16_t>(r));
}

std::ostream& operator<<(std::ostream& os, Fx16 v) {
  return os << v.to_real() << " (raw " << v.raw() << ")";
}

}  // namespace swinfx
