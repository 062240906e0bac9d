// SPDX-FileCopyrightText: © 2026 swinfx contributors
//
// SPDX-License-Identifier: Apache-2.0

#include "swinfx/fusion.hpp"

#include <cmath>

#include "swinfx/error.hpp"

namespace swinfx::fusion {

namespace {

double inv_std(const BNParams& bn, std::size_t c) { return 1.0 / std::sqrt(bn.var[c] + bn.eps); }

Fx16 quantize_counted(double v, std::size_t& saturated) {
  const Fx16 q = Fx16::from_real(v);
  if (v * Fx16::kOneRaw + 0.5 >= Fx16::kRawMax + 1.0 || v * Fx16::kOneRaw + 0.5 < Fx16::kRawMin) ++saturated;
  return q;
}

}  // namespace

void BNParams::validate() const {
  const std::size_t c = gamma.size();
  if (beta.size() != c || mean.size() != c || var.size() != c) throw DomainError("BNParams: vector length mismatch");
  if (!(eps >= 0.0)) throw DomainError("BNParams: eps must be nonnegative");
  for (std::size_t i = 0; i < c; ++i) {
    if (!(var[i] >= 0.0)) throw DomainError("BNParams: negative variance at channel " + std::to_string(i));
    if (var[i] + eps <= 0.0) throw DomainError("BNParams: var + eps must be positive at channel " + std::to_string(i));
  }
}

BNParams BNParams::identity(std::size_t c) {
  return BNParams{std::vector<double>(c, 1.0), std::vector<double>(c, 0.0), std::vector<double>(c, 0.0),
                  std::vector<double>(c, 1.0), 0.0};
}

void LinearParams::validate() const {
  if (b.size() != w.cols()) throw DomainError("LinearParams: bias length != output width");
}

FrozenBN freeze_bn(const BNParams& bn) {
  bn.validate();
  const std::size_t c = bn.channels();
  FrozenBN f{MatReal(c, c), std::vector<double>(c)};
  for (std::size_t i = 0; i < c; ++i) {
    const double s = inv_std(bn, i);
    f.w(i, i) = bn.gamma[i] * s;
    f.b[i] = bn.beta[i] - bn.gamma[i] * bn.mean[i] * s;
  }
  return f;
}

LinearParams fuse_bn_linear(const BNParams& bn, const LinearParams& lin) {
  lin.validate();
  if (bn.channels() != lin.w.rows()) {
    throw DomainError("fuse_bn_linear: BN has " + std::to_string(bn.channels()) + " channels, linear expects " +
                      std::to_string(lin.w.rows()));
  }
  const FrozenBN f = freeze_bn(bn);
  const std::size_t c = lin.w.rows();
  const std::size_t n = lin.w.cols();
  LinearParams out{MatReal(c, n), lin.b};
  // W_bn is diagonal, so W_bn W_lin scales row i of W_lin by W_bn(i, i).
  for (std::size_t i = 0; i < c; ++i)
    for (std::size_t j = 0; j < n; ++j) out.w(i, j) = f.w(i, i) * lin.w(i, j);
  for (std::size_t j = 0; j < n; ++j) {
    double acc = lin.b[j];
    for (std::size_t i = 0; i < c; ++i) acc += f.b[i] * lin.w(i, j);
    out.b[j] = acc;
  }
  return out;
}

LinearParams fold_q_scale(const LinearParams& wq, std::size_t head_dim) {
  if (head_dim == 0) throw DomainError("fold_q_scale: head_dim must be positive");
  const double s = 1.0 / std::sqrt(static_cast<double>(head_dim));
  LinearParams out = wq;
  for (double& v : out.w.data()) v *= s;
  for (double& v : out.b) v *= s;
  return out;
}

FusedLinear quantize_linear(const MatReal& w, std::span<const double> b, std::string note) {
  if (b.size() != w.cols()) throw DomainError("quantize_linear: bias length != output width");
  FusedLinear q{MatFx(w.rows(), w.cols()), std::vector<Fx16>(b.size()), 0, std::move(note)};
  for (std::size_t i = 0; i < w.size(); ++i) q.w.data()[i] = quantize_counted(w.data()[i], q.saturated);
  for (std::size_t i = 0; i < b.size(); ++i) q.b[i] = quantize_counted(b[i], q.saturated);
  return q;
}

FusedLinear quantize_linear(const LinearParams& lin, std::string note) {
  return quantize_linear(lin.w, lin.b, std::move(note));
}

AffineFx quantize_bn_affine(const BNParams& bn) {
  const FrozenBN f = freeze_bn(bn);
  AffineFx a;
  for (std::size_t i = 0; i < bn.channels(); ++i) {
    a.scale.push_back(quantize_counted(f.w(i, i), a.saturated));
    a.shift.push_back(quantize_counted(f.b[i], a.saturated));
  }
  return a;
}

MatFx apply_affine(const MatFx& x, const AffineFx& affine) {
  if (affine.scale.size() != x.cols() || affine.shift.size() != x.cols()) {
    throw DomainError("apply_affine: channel count mismatch");
  }
  MatFx out(x.rows(), x.cols());
  for (std::size_t r = 0; r < x.rows(); ++r)
    for (std::size_t c = 0; c < x.cols(); ++c) {
      Acc48 acc;
      acc.add_product(x(r, c), affine.scale[c]);
      acc.add_bias(affine.shift[c]);
      out(r, c) = acc.fold();
    }
  return out;
}

std::vector<double> apply_linear(const LinearParams& lin, std::span<const double> x) {
  if (x.size() != lin.w.rows()) throw DomainError("apply_linear: input length mismatch");
  std::vector<double> y(lin.b);
  for (std::size_t i = 0; i < lin.w.rows(); ++i)
    for (std::size_t j = 0; j < lin.w.cols(); ++j) y[j] += x[i] * lin.w(i, j);
  return y;
}

std::vector<double> apply_bn(const BNParams& bn, std::span<const double> x) {
  bn.validate();
  if (x.size() != bn.channels()) throw DomainError("apply_bn: input length mismatch");
  std::vector<double> y(x.size());
  for (std::size_t i = 0; i < x.size(); ++i) y[i] = bn.gamma[i] * (x[i] - bn.mean[i]) * inv_std(bn, i) + bn.beta[i];
  return y;
}

}  // namespace swinfx::fusion
