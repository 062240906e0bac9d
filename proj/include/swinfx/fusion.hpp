// SPDX-FileCopyrightText: © 2026 swinfx contributors
//
// SPDX-License-Identifier: Apache-2.0

#pragma once

// Frozen batch-norm folding and full Q6.10 quantization of parameters.
//
// Row-vector convention throughout: a linear layer maps x [1 x C] to
// x W + b with W [C x C_out]. In that convention a frozen BN is the diagonal
// map x W_bn + b_bn, and BN followed by a linear fuses to
// W = W_bn W_lin, b = b_bn W_lin + b_lin.

#include <cstddef>
#include <span>
#include <string>
#include <vector>

#include "swinfx/fxp.hpp"
#include "swinfx/matrix.hpp"

namespace swinfx::fusion {

struct BNParams {
  std::vector<double> gamma;
  std::vector<double> beta;
  std::vector<double> mean;
  std::vector<double> var;
  double eps = 1e-5;

  std::size_t channels() const { return gamma.size(); }
  // Throws DomainError on length mismatch, negative variance, or eps < 0.
  void validate() const;
  // Identity BN over c channels (eps = 0).
  static BNParams identity(std::size_t c);
};

struct LinearParams {
  MatReal w;  // [C_in x C_out]
  std::vector<double> b;  // [C_out]

  void validate() const;
};

struct FrozenBN {
  MatReal w;  // diagonal [C x C]
  std::vector<double> b;
};

// Diagonal gamma / sqrt(var + eps) and bias beta - gamma mean / sqrt(var + eps).
FrozenBN freeze_bn(const BNParams& bn);

// Throws DomainError when bn.channels() != lin.w.rows().
LinearParams fuse_bn_linear(const BNParams& bn, const LinearParams& lin);

// Weights and bias scaled by 1 / sqrt(head_dim). Throws DomainError for head_dim == 0.
LinearParams fold_q_scale(const LinearParams& wq, std::size_t head_dim);

struct FusedLinear {
  MatFx w;
  std::vector<Fx16> b;
  std::size_t saturated = 0;  // entries clipped during quantization
  std::string note;           // which BN, if any, was folded in
};

// Every entry through Fx16::from_real; one global Q6.10 scale, no per-channel
// factors. Saturation is counted, not fatal.
FusedLinear quantize_linear(const MatReal& w, std::span<const double> b, std::string note = {});
FusedLinear quantize_linear(const LinearParams& lin, std::string note = {});

// Standalone BN with no linear layer after it: per-channel scale and shift.
struct AffineFx {
  std::vector<Fx16> scale;
  std::vector<Fx16> shift;
  std::size_t saturated = 0;
};

AffineFx quantize_bn_affine(const BNParams& bn);

// Row-wise x * scale + shift, saturating.
MatFx apply_affine(const MatFx& x, const AffineFx& affine);

// Double-precision reference applications.
std::vector<double> apply_linear(const LinearParams& lin, std::span<const double> x);
std::vector<double> apply_bn(const BNParams& bn, std::span<const double> x);

}  // namespace swinfx::fusion
