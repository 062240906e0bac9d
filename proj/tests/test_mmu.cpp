// SPDX-FileCopyrightText: © 2026 swinfx contributors
//
// SPDX-License-Identifier: Apache-2.0

#include <vector>

#include "doctest.h"
#include "swinfx/error.hpp"
#include "swinfx/mmu.hpp"
#include "swinfx/rng.hpp"

using namespace swinfx;
using namespace swinfx::mmu;

namespace {

MatFx random_mat(Rng& rng, std::size_t r, std::size_t c, int lo = -4096, int hi = 4096) {
  MatFx m(r, c);
  for (Fx16& v : m.data()) {
    const auto x = rng.uniform_int(lo, hi);
    v = Fx16::from_raw(static_cast<std::int16_t>(x));
  }
  return m;
}

// Plain triple loop, one wide accumulator per output.
MatFx naive(const MatFx& a, const MatFx& b) {
  MatFx out(a.rows(), b.cols());
  for (std::size_t i = 0; i < a.rows(); ++i)
    for (std::size_t j = 0; j < b.cols(); ++j) {
      Acc48 acc;
      for (std::size_t k = 0; k < a.cols(); ++k) acc.add_product(a(i, k), b(k, j));
      out(i, j) = acc.fold();
    }
  return out;
}

}  // namespace

TEST_CASE("identity times b is b") {
  Rng rng(1);
  MatFx eye(4, 4);
  for (std::size_t i = 0; i < 4; ++i) eye(i, i) = Fx16::one();
  const MatFx b = random_mat(rng, 4, 4);
  CHECK(matmul_tiled(eye, b, TileConfig{4, 2, 2}) == b);
}

TEST_CASE("all-zero a gives all-zero output") {
  Rng rng(2);
  const MatFx b = random_mat(rng, 96, 32);
  CHECK(matmul_tiled(MatFx(49, 96), b, TileConfig{}) == MatFx(49, 32));
}

TEST_CASE("tiled product equals the naive loop") {
  Rng rng(3);
  const MatFx a = random_mat(rng, 49, 96);
  const MatFx b = random_mat(rng, 96, 32);
  CHECK(matmul_tiled(a, b, TileConfig{}) == naive(a, b));
  for (int t = 0; t < 150; ++t) {
    const auto r = static_cast<std::size_t>(rng.uniform_int(1, 70));
    const auto k = static_cast<std::size_t>(rng.uniform_int(1, 70));
    const auto n = static_cast<std::size_t>(rng.uniform_int(1, 70));
    const TileConfig cfg{static_cast<std::size_t>(rng.uniform_int(1, 64)), static_cast<std::size_t>(rng.uniform_int(1, 16)),
                         static_cast<std::size_t>(rng.uniform_int(1, 40))};
    const MatFx x = random_mat(rng, r, k, -32768, 32767);
    const MatFx y = random_mat(rng, k, n, -32768, 32767);
    REQUIRE(matmul_tiled(x, y, cfg) == naive(x, y));
  }
}

TEST_CASE("shape mismatch is a domain error") {
  CHECK_THROWS_AS(matmul_tiled(MatFx(2, 3), MatFx(4, 2), TileConfig{}), DomainError);
  CHECK_THROWS_AS(attention_scores(MatFx(49, 32), MatFx(31, 49), TileConfig{}), DomainError);
  CHECK_THROWS_AS(linear(MatFx(2, 3), MatFx(3, 2), std::vector<Fx16>(3), TileConfig{}), DomainError);
  CHECK_THROWS_AS(TileConfig({0, 1, 32}).validate(), DomainError);
}

TEST_CASE("counters track tiles, cycles and padding") {
  MmuCounters c;
  matmul_tiled(MatFx(49, 96), MatFx(96, 32), TileConfig{}, &c);
  CHECK(c.tiles == 96);
  CHECK(c.cycles == 96);
  CHECK(c.issued_macs == 49u * 96u * 32u);
  CHECK(c.invalid_macs() == 0);
  MmuCounters p;
  matmul_tiled(MatFx(49, 32), MatFx(32, 49), TileConfig{}, &p);
  CHECK(p.issued_macs == 49u * 32u * 64u);
  CHECK(p.useful_macs == 49u * 32u * 49u);
  CHECK(p.invalid_macs() == 15u * 49u * 32u);
  MmuCounters wide;
  matmul_tiled(MatFx(49, 10), MatFx(10, 32), TileConfig{49, 4, 32}, &wide);
  CHECK(wide.tiles == 3);
  CHECK(wide.cycles == 12);
}

TEST_CASE("linear adds the bias through the accumulator") {
  Rng rng(4);
  const MatFx x = random_mat(rng, 49, 32);
  const MatFx w = random_mat(rng, 32, 40);
  std::vector<Fx16> b(40);
  for (Fx16& v : b) v = Fx16::from_real(rng.uniform(-1.0, 1.0));
  const MatFx y = linear(x, w, b, TileConfig{});
  for (std::size_t i = 0; i < x.rows(); ++i)
    for (std::size_t j = 0; j < w.cols(); ++j) {
      Acc48 acc;
      acc.add_bias(b[j]);
      for (std::size_t k = 0; k < x.cols(); ++k) acc.add_product(x(i, k), w(k, j));
      REQUIRE(y(i, j) == acc.fold());
    }
  CHECK(linear(x, w, {}, TileConfig{}) == naive(x, w));
}

TEST_CASE("pad_kt examples") {
  CHECK(pad_kt(MatFx(32, 49), 32).cols() == 64);
  CHECK(pad_kt(MatFx(32, 32), 32).cols() == 32);
  Rng rng(5);
  const MatFx one = random_mat(rng, 3, 1);
  const MatFx p = pad_kt(one, 32);
  CHECK(p.cols() == 32);
  CHECK(p.col_slice(0, 1) == one);
  CHECK(p.col_slice(1, 31) == MatFx(3, 31));
}

TEST_CASE("attention_scores matches the unpadded product on the valid region") {
  Rng rng(6);
  CHECK(attention_scores(MatFx(49, 32), random_mat(rng, 32, 49), TileConfig{}) == MatFx(49, 49));
  for (int t = 0; t < 100; ++t) {
    const MatFx q = random_mat(rng, 49, 32);
    const MatFx kt = random_mat(rng, 32, 49);
    const MatFx s = attention_scores(q, kt, TileConfig{});
    REQUIRE(s.rows() == 49);
    REQUIRE(s.cols() == 49);
    REQUIRE(s == naive(q, kt));
    // Padding amount does not matter.
    REQUIRE(attention_scores(q, kt, TileConfig{49, 1, 20}) == s);
  }
  MmuCounters c;
  attention_scores(MatFx(49, 32), MatFx(32, 49), TileConfig{}, &c);
  CHECK(c.useful_macs == 49u * 32u * 49u);
  CHECK(c.invalid_macs() == 15u * 49u * 32u);
}

TEST_CASE("matmul is linear when nothing saturates") {
  Rng rng(7);
  for (int t = 0; t < 50; ++t) {
    const MatFx a1 = random_mat(rng, 20, 16, -256, 256);
    const MatFx a2 = random_mat(rng, 20, 16, -256, 256);
    const MatFx b = random_mat(rng, 16, 12, -256, 256);
    MatFx sum(20, 16);
    for (std::size_t i = 0; i < sum.size(); ++i) sum.data()[i] = add_sat(a1.data()[i], a2.data()[i]);
    // Exact in the accumulator: compare before the fold.
    for (std::size_t i = 0; i < 20; ++i)
      for (std::size_t j = 0; j < 12; ++j) {
        Acc48 s;
        Acc48 p;
        for (std::size_t k = 0; k < 16; ++k) {
          s.add_product(sum(i, k), b(k, j));
          p.add_product(a1(i, k), b(k, j));
          p.add_product(a2(i, k), b(k, j));
        }
        REQUIRE(s.raw() == p.raw());
      }
    const MatFx y = matmul_tiled(sum, b, TileConfig{});
    const MatFx y1 = matmul_tiled(a1, b, TileConfig{});
    const MatFx y2 = matmul_tiled(a2, b, TileConfig{});
    for (std::size_t i = 0; i < y.size(); ++i) {
      const int diff = y.data()[i].raw() - add_sat(y1.data()[i], y2.data()[i]).raw();
      REQUIRE(std::abs(diff) <= 1);  // two folds versus one
    }
  }
}

TEST_CASE("im2col shapes") {
  CHECK(im2col_patch_embed(ImageFx(1, 224, 224)).rows() == 3136);
  CHECK(im2col_patch_embed(ImageFx(1, 224, 224)).cols() == 16);
  const MatFx small = im2col_patch_embed(ImageFx(3, 8, 8));
  CHECK(small.rows() == 4);
  CHECK(small.cols() == 48);
  CHECK_THROWS_AS(im2col_patch_embed(ImageFx(1, 10, 8)), DomainError);
}

TEST_CASE("im2col times flattened kernel equals direct stride-4 convolution") {
  Rng rng(8);
  for (int t = 0; t < 25; ++t) {
    const std::size_t cin = 3;
    const std::size_t cout = 5;
    ImageFx img(cin, 8, 8);
    for (Fx16& v : img.data) v = Fx16::from_real(rng.uniform(-2.0, 2.0));
    // kernel[o][c][ky][kx]
    std::vector<Fx16> kernel(cout * cin * 16);
    for (Fx16& v : kernel) v = Fx16::from_real(rng.uniform(-1.0, 1.0));
    MatFx w(cin * 16, cout);
    for (std::size_t o = 0; o < cout; ++o)
      for (std::size_t c = 0; c < cin; ++c)
        for (std::size_t k = 0; k < 16; ++k) w(c * 16 + k, o) = kernel[(o * cin + c) * 16 + k];
    const MatFx y = matmul_tiled(im2col_patch_embed(img), w, TileConfig{});
    for (std::size_t py = 0; py < 2; ++py)
      for (std::size_t px = 0; px < 2; ++px)
        for (std::size_t o = 0; o < cout; ++o) {
          Acc48 acc;
          for (std::size_t c = 0; c < cin; ++c)
            for (std::size_t ky = 0; ky < 4; ++ky)
              for (std::size_t kx = 0; kx < 4; ++kx)
                acc.add_product(img.at(c, py * 4 + ky, px * 4 + kx), kernel[((o * cin + c) * 4 + ky) * 4 + kx]);
          REQUIRE(y(py * 2 + px, o) == acc.fold());
        }
  }
}
