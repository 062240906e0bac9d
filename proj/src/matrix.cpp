// SPDX-FileCopyrightText: © 2026 swinfx contributors
//
// SPDX-License-Identifier: Apache-2.0

#include "swinfx/matrix.hpp"

namespace swinfx {

MatReal to_real(const MatFx& m) { return MatReal(m.rows(), m.cols(), to_real(std::span<const Fx16>(m.data()))); }

MatFx from_real(const MatReal& m) { return MatFx(m.rows(), m.cols(), from_real(std::span<const double>(m.data()))); }

std::vector<double> to_real(std::span<const Fx16> v) {
  std::vector<double> out;
  out.reserve(v.size());
  for (Fx16 x : v) out.push_back(x.to_real());
  return out;
}

std::vector<Fx16> from_real(std::span<const double> v) {
  std::vector<Fx16> out;
  out.reserve(v.size());
  for (double x : v) out.push_back(Fx16::from_real(x));
  return out;
}

}  // namespace swinfx
