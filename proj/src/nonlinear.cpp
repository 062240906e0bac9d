// SPDX-FileCopyrightText: © 2026 swinfx contributors
//
// SPDX-License-Identifier: Apache-2.0

#include "swinfx/nonlinear.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

#include "swinfx/approx.hpp"
#include "swinfx/error.hpp"

namespace swinfx::nonlinear {

std::vector<Fx16> softmax_row(std::span<const Fx16> values, std::span<const Fx16> mask) {
  const std::size_t n = values.size();
  if (n == 0) throw DomainError("softmax_row: empty row");
  if (n > kMaxSoftmaxLen) throw DomainError("softmax_row: row longer than 64");
  if (!mask.empty() && mask.size() != n) throw DomainError("softmax_row: mask length mismatch");
  if (!mask.empty() && std::all_of(mask.begin(), mask.end(), [](Fx16 m) { return m <= kMaskValue; })) {
    throw DomainError("softmax_row: every position is masked");
  }

  std::vector<Fx16> x(values.begin(), values.end());
  if (!mask.empty()) {
    for (std::size_t i = 0; i < n; ++i) x[i] = add_sat(x[i], mask[i]);
  }

  const Fx16 x_max = approx::find_max(x).value;

  std::vector<Fx16> numer(n);
  std::int64_t sum = 0;  // adder tree, full width
  for (std::size_t i = 0; i < n; ++i) {
    numer[i] = approx::exp2(approx::mul_log2e(sub_sat(x[i], x_max)));
    sum += numer[i].raw();
  }
  if (sum <= 0) throw DomainError("softmax_row: numerator sum underflowed to zero");

  std::vector<Fx16> out(n);
  for (std::size_t i = 0; i < n; ++i) {
    // LOD of zero raises the zero flag; the output is zero.
    if (numer[i].raw() == 0) continue;
    out[i] = approx::exp2(approx::div_exponent_wide(numer[i], sum, false));
  }
  return out;
}

std::vector<double> softmax_reference(std::span<const double> row) {
  if (row.empty()) return {};
  const double m = *std::max_element(row.begin(), row.end());
  std::vector<double> out(row.size());
  double sum = 0.0;
  for (std::size_t i = 0; i < row.size(); ++i) {
    out[i] = std::exp(row[i] - m);
    sum += out[i];
  }
  for (double& v : out) v /= sum;
  return out;
}

Fx16 gelu_poly_s(Fx16 x) {
  const Fx16 cube = mul(mul(x, x), x);
  const Fx16 c2_cube = add_sat(shift(cube, -5), shift(cube, -6));  // 0.000011b
  const Fx16 t = add_sat(x, c2_cube);
  // -10.0101b = -(2 + 1/4 + 1/16)
  return sub_sat(sub_sat(neg_sat(shift(t, 1)), shift(t, -2)), shift(t, -4));
}

namespace {

Fx16 gelu_positive(Fx16 x) {
  const Fx16 s = gelu_poly_s(x);
  const Fx16 d = approx::exp2(s);
  const Fx16 e = approx::div_exponent(x, d, true);
  return approx::exp2(e);
}

}  // namespace

Fx16 gelu(Fx16 x) {
  if (x.raw() == 0) return Fx16::zero();
  if (x.raw() > 0) return gelu_positive(x);
  return add_sat(x, gelu_positive(abs_sat(x)));
}

double gelu_reference(double x) {
  const double k = std::sqrt(2.0 / std::numbers::pi);
  return 0.5 * x * (1.0 + std::tanh(k * (x + 0.044715 * x * x * x)));
}

}  // namespace swinfx::nonlinear
