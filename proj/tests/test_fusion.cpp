// SPDX-FileCopyrightText: © 2026 swinfx contributors
//
// SPDX-License-Identifier: Apache-2.0

#include <iomanip>
#include <algorithm>
#include <cmath>
#include <vector>

#include "doctest.h"
#include "swinfx/error.hpp"
#include "swinfx/fusion.hpp"
#include "swinfx/mmu.hpp"
#include "swinfx/nonlinear.hpp"
#include "swinfx/rng.hpp"

using namespace swinfx;
using namespace swinfx::fusion;

namespace {

// Measured once; see the closure test.
constexpr double kLockedClosure = 0.0146484375;

BNParams random_bn(Rng& rng, std::size_t c) {
  BNParams bn;
  for (std::size_t i = 0; i < c; ++i) {
    const double g = rng.uniform(0.5, 1.5);
    const double b = rng.normal(0.0, 0.2);
    const double m = rng.normal(0.0, 0.5);
    const double v = rng.uniform(0.1, 2.0);
    bn.gamma.push_back(g);
    bn.beta.push_back(b);
    bn.mean.push_back(m);
    bn.var.push_back(v);
  }
  bn.eps = 1e-5;
  return bn;
}

LinearParams random_linear(Rng& rng, std::size_t in, std::size_t out) {
  LinearParams lin{MatReal(in, out), std::vector<double>(out)};
  for (double& w : lin.w.data()) w = rng.normal(0.0, 1.0 / std::sqrt(static_cast<double>(in)));
  for (double& b : lin.b) b = rng.normal(0.0, 0.1);
  return lin;
}

std::vector<double> random_vec(Rng& rng, std::size_t n, double lo, double hi) {
  std::vector<double> v(n);
  for (double& e : v) e = rng.uniform(lo, hi);
  return v;
}

double max_abs(const std::vector<double>& v) {
  double m = 0.0;
  for (double e : v) m = std::max(m, std::abs(e));
  return m;
}

}  // namespace

TEST_CASE("freeze_bn examples") {
  const FrozenBN id = freeze_bn(BNParams::identity(3));
  for (std::size_t i = 0; i < 3; ++i) {
    CHECK(id.b[i] == 0.0);
    for (std::size_t j = 0; j < 3; ++j) CHECK(id.w(i, j) == (i == j ? 1.0 : 0.0));
  }
  const FrozenBN f = freeze_bn(BNParams{{2.0}, {1.0}, {3.0}, {4.0}, 0.0});
  CHECK(f.w(0, 0) == 1.0);
  CHECK(f.b[0] == -2.0);
  const FrozenBN z = freeze_bn(BNParams{{0.0, 1.0}, {0.7, 0.0}, {5.0, 0.0}, {1.0, 1.0}, 0.0});
  CHECK(z.w(0, 0) == 0.0);
  CHECK(z.b[0] == 0.7);
}

TEST_CASE("BN validation") {
  CHECK_THROWS_AS(freeze_bn(BNParams{{1.0}, {0.0}, {0.0}, {-1.0}, 1e-5}), DomainError);
  CHECK_THROWS_AS(freeze_bn(BNParams{{1.0, 1.0}, {0.0}, {0.0}, {1.0}, 1e-5}), DomainError);
  CHECK_THROWS_AS(freeze_bn(BNParams{{1.0}, {0.0}, {0.0}, {0.0}, 0.0}), DomainError);
  CHECK_THROWS_AS(freeze_bn(BNParams{{1.0}, {0.0}, {0.0}, {1.0}, -1.0}), DomainError);
}

TEST_CASE("fuse_bn_linear examples") {
  Rng rng(1);
  const LinearParams lin = random_linear(rng, 8, 5);
  const LinearParams same = fuse_bn_linear(BNParams::identity(8), lin);
  CHECK(same.w == lin.w);
  CHECK(same.b == lin.b);
  LinearParams zero{MatReal(8, 5), lin.b};
  const LinearParams z = fuse_bn_linear(random_bn(rng, 8), zero);
  CHECK(z.w == MatReal(8, 5));
  CHECK(z.b == lin.b);
  CHECK_THROWS_AS(fuse_bn_linear(BNParams::identity(7), lin), DomainError);
}

TEST_CASE("fused layer equals BN then linear on 1000 random triples") {
  Rng rng(2);
  double worst = 0.0;
  for (int t = 0; t < 1000; ++t) {
    const auto c = static_cast<std::size_t>(rng.uniform_int(1, 64));
    const auto out = static_cast<std::size_t>(rng.uniform_int(1, 64));
    const BNParams bn = random_bn(rng, c);
    const LinearParams lin = random_linear(rng, c, out);
    const std::vector<double> x = random_vec(rng, c, -4.0, 4.0);
    const std::vector<double> seq = apply_linear(lin, apply_bn(bn, x));
    const std::vector<double> fused = apply_linear(fuse_bn_linear(bn, lin), x);
    std::vector<double> diff(seq.size());
    for (std::size_t j = 0; j < seq.size(); ++j) diff[j] = fused[j] - seq[j];
    worst = std::max(worst, max_abs(diff) / max_abs(seq));
  }
  CHECK(worst <= 1e-10);
}

TEST_CASE("fold_q_scale examples") {
  Rng rng(3);
  const LinearParams lin = random_linear(rng, 4, 4);
  const LinearParams one = fold_q_scale(lin, 1);
  CHECK(one.w == lin.w);
  CHECK(one.b == lin.b);
  const LinearParams half = fold_q_scale(lin, 4);
  for (std::size_t i = 0; i < lin.w.size(); ++i) CHECK(half.w.data()[i] == lin.w.data()[i] / 2);
  for (std::size_t i = 0; i < lin.b.size(); ++i) CHECK(half.b[i] == lin.b[i] / 2);
  CHECK_THROWS_AS(fold_q_scale(lin, 0), DomainError);
}

TEST_CASE("folded W_Q scores equal unfolded scores scaled by 1/sqrt(32)") {
  Rng rng(4);
  const std::size_t d = 32;
  const LinearParams wq = random_linear(rng, d, d);
  const LinearParams wk = random_linear(rng, d, d);
  const FusedLinear qf = quantize_linear(fold_q_scale(wq, d));
  const FusedLinear k = quantize_linear(wk);
  MatFx x(49, d);
  for (Fx16& v : x.data()) v = Fx16::from_real(rng.uniform(-1.0, 1.0));
  const MatFx kt = mmu::linear(x, k.w, k.b, mmu::TileConfig{}).transposed();
  const MatFx scores = mmu::attention_scores(mmu::linear(x, qf.w, qf.b, mmu::TileConfig{}), kt, mmu::TileConfig{});
  const MatReal xr = to_real(x);
  const MatReal ktr = to_real(kt);
  double worst = 0.0;
  int argmax_agree = 0;
  for (std::size_t r = 0; r < 49; ++r) {
    const std::vector<double> q = apply_linear(wq, xr.row(r));
    std::vector<double> ref(49);
    for (std::size_t j = 0; j < 49; ++j) {
      double s = 0.0;
      for (std::size_t i = 0; i < d; ++i) s += q[i] * ktr(i, j);
      ref[j] = s / std::sqrt(32.0);
      worst = std::max(worst, std::abs(scores(r, j).to_real() - ref[j]));
    }
    const auto fixed = nonlinear::softmax_row(scores.row(r));
    const auto exact = nonlinear::softmax_reference(ref);
    const auto fa = std::max_element(fixed.begin(), fixed.end()) - fixed.begin();
    const auto ea = std::max_element(exact.begin(), exact.end()) - exact.begin();
    if (fa == ea) ++argmax_agree;
  }
  // Weight quantization error times |x| sums over 32 terms.
  CHECK(worst <= 0.05);
  CHECK(argmax_agree >= 45);
}

TEST_CASE("quantize_linear examples") {
  MatReal grid(2, 2, {0.5, -1.25, 3.0 / 1024, 0.0});
  const FusedLinear g = quantize_linear(grid, std::vector<double>{1.0, -2.0}, "none");
  CHECK(to_real(g.w) == grid);
  CHECK(g.b[1].to_real() == -2.0);
  CHECK(g.saturated == 0);
  CHECK(g.note == "none");
  const FusedLinear s = quantize_linear(MatReal(1, 2, {100.0, -50.0}), std::vector<double>{40.0, 0.0});
  CHECK(s.saturated == 3);
  CHECK(s.w(0, 0) == Fx16::max());
  CHECK_THROWS_AS(quantize_linear(MatReal(2, 2), std::vector<double>(3)), DomainError);
}

TEST_CASE("Gaussian weights quantize within half an ulp") {
  Rng rng(5);
  MatReal w(64, 64);
  for (double& v : w.data()) v = rng.normal();
  const FusedLinear q = quantize_linear(w, std::vector<double>(64));
  double worst = 0.0;
  for (std::size_t i = 0; i < w.size(); ++i) worst = std::max(worst, std::abs(q.w.data()[i].to_real() - w.data()[i]));
  CHECK(worst <= 1.0 / 2048);
  CHECK(q.saturated == 0);
}

TEST_CASE("standalone BN affine") {
  const BNParams bn{{2.0, 0.0}, {1.0, 0.5}, {3.0, 1.0}, {4.0, 1.0}, 0.0};
  const AffineFx a = quantize_bn_affine(bn);
  CHECK(a.scale[0].to_real() == 1.0);
  CHECK(a.shift[0].to_real() == -2.0);
  CHECK(a.scale[1] == Fx16::zero());
  MatFx x(1, 2, {Fx16::from_int(3), Fx16::from_int(7)});
  const MatFx y = apply_affine(x, a);
  CHECK(y(0, 0).to_real() == 1.0);
  CHECK(y(0, 1).to_real() == 0.5);
  CHECK_THROWS_AS(apply_affine(MatFx(1, 3), a), DomainError);
}

TEST_CASE("quantized fused path against quantized sequential path is locked") {
  Rng rng(6);
  double worst = 0.0;
  for (int t = 0; t < 200; ++t) {
    const BNParams bn = random_bn(rng, 32);
    const LinearParams lin = random_linear(rng, 32, 32);
    const FusedLinear fused = quantize_linear(fuse_bn_linear(bn, lin));
    const AffineFx bn_fx = quantize_bn_affine(bn);
    const FusedLinear lin_fx = quantize_linear(lin);
    MatFx x(8, 32);
    for (Fx16& v : x.data()) v = Fx16::from_real(rng.uniform(-2.0, 2.0));
    const MatFx a = mmu::linear(x, fused.w, fused.b, mmu::TileConfig{});
    const MatFx b = mmu::linear(apply_affine(x, bn_fx), lin_fx.w, lin_fx.b, mmu::TileConfig{});
    for (std::size_t i = 0; i < a.size(); ++i) worst = std::max(worst, std::abs(a.data()[i].to_real() - b.data()[i].to_real()));
  }
  MESSAGE("fused vs sequential max abs: " << std::setprecision(17) << worst);
  CHECK(worst == doctest::Approx(kLockedClosure));
}
