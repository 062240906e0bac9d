// SPDX-FileCopyrightText: © 2026 swinfx contributors
//
// SPDX-License-Identifier: Apache-2.0

#pragma once

// Softmax (SCU) and GELU (GCU) units assembled from the approx primitives,
// with the double-precision functions they are measured against.

#include <cstddef>
#include <span>
#include <vector>

#include "swinfx/fxp.hpp"

namespace swinfx::nonlinear {

// Additive mask entry for a disallowed attention position.
inline constexpr Fx16 kMaskValue = Fx16::from_int(-16);
inline constexpr std::size_t kMaxSoftmaxLen = 64;

// Four-stage SCU:
//   1. x_max over (values + mask) via the FMU
//   2. numerators exp2(log2e * (x_i - x_max))
//   3. exact adder-tree sum; DU exponent of numerator_i / sum
//   4. exp2 of each exponent
// mask, when non-empty, must match values in length. Throws DomainError for
// n == 0, n > 64, a length mismatch, or a row whose mask disallows every
// position.
std::vector<Fx16> softmax_row(std::span<const Fx16> values, std::span<const Fx16> mask = {});

// Max-subtracted softmax in double precision.
std::vector<double> softmax_reference(std::span<const double> row);

// s(x) = C1 (x + C2 x^3) with C1 = -10.0101b and C2 = 0.000011b, both applied
// as shift-add chains; x^3 takes two multiplies.
Fx16 gelu_poly_s(Fx16 x);

// Four-stage GCU for x > 0: s(x), d = 2^s, DU exponent of x / (1 + d), exp2.
// Negative inputs use gelu(x) = x + gelu(-x), which keeps every LOD input
// positive.
Fx16 gelu(Fx16 x);

// Tanh-form GELU in double precision.
double gelu_reference(double x);

}  // namespace swinfx::nonlinear
