// SPDX-FileCopyrightText: © 2026 swinfx contributors
//
// SPDX-License-Identifier: Apache-2.0

#pragma once

// Blocked matrix-multiplication engine. Every linear computation in the
// model (patch embedding, QKV, q.k^T, scores.V, projection, FFN, patch
// merging) goes through matmul_tiled.

#include <cstddef>
#include <cstdint>
#include <span>
#include <vector>

#include "swinfx/fxp.hpp"
#include "swinfx/matrix.hpp"

namespace swinfx::mmu {

// One pass of the engine multiplies an [m2 x ci] block of A by a [ci x co]
// block of B. The deployed configuration is 32 PEs of 49 multipliers, i.e.
// m2 = 49 and co = 32, fed one inner index per cycle (ci = 1).
struct TileConfig {
  std::size_t m2 = 49;
  std::size_t ci = 1;
  std::size_t co = 32;

  void validate() const;
};

struct MmuCounters {
  std::uint64_t tiles = 0;        // (row tile, col tile, inner tile) passes
  std::uint64_t cycles = 0;       // ci cycles per pass
  std::uint64_t issued_macs = 0;  // including zero padding
  std::uint64_t useful_macs = 0;  // excluding zero padding

  std::uint64_t invalid_macs() const { return issued_macs - useful_macs; }
  MmuCounters& operator+=(const MmuCounters& o);
};

// A [R x K] times B [K x N]. Rows are processed in tiles of m2, columns in
// tiles of co, the inner dimension in tiles of ci; ragged edges are zero
// padded. Each output element accumulates its K products in ascending order
// in an Acc48 and folds to Q6.10 once, so the result equals the naive
// triple loop bit for bit. Throws DomainError on a shape mismatch.
MatFx matmul_tiled(const MatFx& a, const MatFx& b, const TileConfig& cfg, MmuCounters* counters = nullptr);

// x W + bias, the bias preloaded into the accumulation buffer. bias may be
// empty; otherwise its length must equal w.cols().
MatFx linear(const MatFx& x, const MatFx& w, std::span<const Fx16> bias, const TileConfig& cfg,
             MmuCounters* counters = nullptr);

// Appends zero columns up to the next multiple of co.
MatFx pad_kt(const MatFx& kt, std::size_t co);

// q [n x d] times kt [d x n] with kt padded to a multiple of cfg.co; the
// padded columns are dropped from the result. The 1/sqrt(d) scale is expected
// to be folded into W_Q already. Padded MACs count as issued, not useful.
MatFx attention_scores(const MatFx& q, const MatFx& kt, const TileConfig& cfg, MmuCounters* counters = nullptr);

// Channel-major image [c x h x w].
struct ImageFx {
  std::size_t c = 0;
  std::size_t h = 0;
  std::size_t w = 0;
  std::vector<Fx16> data;

  ImageFx() = default;
  ImageFx(std::size_t c_, std::size_t h_, std::size_t w_) : c(c_), h(h_), w(w_), data(c_ * h_ * w_) {}

  Fx16& at(std::size_t ch, std::size_t y, std::size_t x) { return data[(ch * h + y) * w + x]; }
  Fx16 at(std::size_t ch, std::size_t y, std::size_t x) const { return data[(ch * h + y) * w + x]; }
};

// Non-overlapping patch x patch blocks flattened into rows of length
// patch^2 * c. Row index py * (w / patch) + px; column ch * patch^2 + ky *
// patch + kx. Throws DomainError unless h and w are multiples of patch.
MatFx im2col_patch_embed(const ImageFx& image, std::size_t patch = 4);

}  // namespace swinfx::mmu
