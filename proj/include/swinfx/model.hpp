// SPDX-FileCopyrightText: © 2026 swinfx contributors
//
// SPDX-License-Identifier: Apache-2.0

#pragma once

// Toy-scale Swin pipeline on the fixed-point kernels: window partition and
// cyclic shift, the shifted-window mask, W-MSA / SW-MSA with shortcut, FFN,
// patch embedding and patch merging. A double-precision twin of the block
// (same quantized weights, exact softmax and GELU) lives in model::reference.

#include <cstddef>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "swinfx/error.hpp"
#include "swinfx/fusion.hpp"
#include "swinfx/fxp.hpp"
#include "swinfx/matrix.hpp"
#include "swinfx/mmu.hpp"
#include "swinfx/rng.hpp"

namespace swinfx::model {

// [h x w x c] grid, channels fastest.
template <class T>
struct FeatureMapT {
  std::size_t h = 0;
  std::size_t w = 0;
  std::size_t c = 0;
  std::vector<T> data;

  FeatureMapT() = default;
  FeatureMapT(std::size_t h_, std::size_t w_, std::size_t c_) : h(h_), w(w_), c(c_), data(h_ * w_ * c_) {}

  T& at(std::size_t y, std::size_t x, std::size_t ch) { return data[(y * w + x) * c + ch]; }
  const T& at(std::size_t y, std::size_t x, std::size_t ch) const { return data[(y * w + x) * c + ch]; }

  // Tokens as rows: [h*w x c].
  Matrix<T> tokens() const { return Matrix<T>(h * w, c, data); }
  static FeatureMapT from_tokens(const Matrix<T>& m, std::size_t h, std::size_t w) {
    if (m.rows() != h * w) throw DomainError("FeatureMap::from_tokens: row count != h*w");
    FeatureMapT f(h, w, m.cols());
    f.data = m.data();
    return f;
  }

  friend bool operator==(const FeatureMapT&, const FeatureMapT&) = default;
};

using FeatureMap = FeatureMapT<Fx16>;
using FeatureMapReal = FeatureMapT<double>;

FeatureMapReal to_real(const FeatureMap& fm);

struct BlockConfig {
  std::size_t window = 7;
  std::size_t channels = 32;
  std::size_t heads = 1;
  std::size_t mlp_ratio = 4;
  bool shifted = false;
  bool rel_pos_bias = false;

  std::size_t tokens() const { return window * window; }
  std::size_t head_dim() const { return channels / heads; }
  std::size_t hidden() const { return channels * mlp_ratio; }
  std::size_t shift() const { return shifted ? window / 2 : 0; }
  // Throws DomainError on zero sizes or channels not divisible by heads.
  void validate() const;
};

// Windows in row-major window order, tokens row-major inside each window.
// Throws DomainError unless h and w are multiples of m.
template <class T>
std::vector<Matrix<T>> window_partition(const FeatureMapT<T>& fm, std::size_t m) {
  if (m == 0 || fm.h % m != 0 || fm.w % m != 0) {
    throw DomainError("window_partition: " + std::to_string(fm.h) + "x" + std::to_string(fm.w) +
                      " not divisible by window " + std::to_string(m));
  }
  std::vector<Matrix<T>> windows;
  for (std::size_t wy = 0; wy < fm.h / m; ++wy)
    for (std::size_t wx = 0; wx < fm.w / m; ++wx) {
      Matrix<T> win(m * m, fm.c);
      for (std::size_t y = 0; y < m; ++y)
        for (std::size_t x = 0; x < m; ++x)
          for (std::size_t ch = 0; ch < fm.c; ++ch) win(y * m + x, ch) = fm.at(wy * m + y, wx * m + x, ch);
      windows.push_back(std::move(win));
    }
  return windows;
}

template <class T>
FeatureMapT<T> window_reverse(const std::vector<Matrix<T>>& windows, std::size_t h, std::size_t w, std::size_t m) {
  if (m == 0 || h % m != 0 || w % m != 0) throw DomainError("window_reverse: dims not divisible by window");
  if (windows.size() != (h / m) * (w / m)) throw DomainError("window_reverse: window count mismatch");
  const std::size_t c = windows.empty() ? 0 : windows.front().cols();
  FeatureMapT<T> fm(h, w, c);
  std::size_t idx = 0;
  for (std::size_t wy = 0; wy < h / m; ++wy)
    for (std::size_t wx = 0; wx < w / m; ++wx, ++idx) {
      const Matrix<T>& win = windows[idx];
      if (win.rows() != m * m || win.cols() != c) throw DomainError("window_reverse: window shape mismatch");
      for (std::size_t y = 0; y < m; ++y)
        for (std::size_t x = 0; x < m; ++x)
          for (std::size_t ch = 0; ch < c; ++ch) fm.at(wy * m + y, wx * m + x, ch) = win(y * m + x, ch);
    }
  return fm;
}

// Toroidal roll: output(y, x) = input((y - dy) mod h, (x - dx) mod w).
template <class T>
FeatureMapT<T> cyclic_shift(const FeatureMapT<T>& fm, long dy, long dx) {
  FeatureMapT<T> out(fm.h, fm.w, fm.c);
  const long h = static_cast<long>(fm.h);
  const long w = static_cast<long>(fm.w);
  for (long y = 0; y < h; ++y)
    for (long x = 0; x < w; ++x) {
      const long sy = ((y - dy) % h + h) % h;
      const long sx = ((x - dx) % w + w) % w;
      for (std::size_t ch = 0; ch < fm.c; ++ch) out.at(y, x, ch) = fm.at(sy, sx, ch);
    }
  return out;
}

// One [M^2 x M^2] additive mask per window, entries 0 or kMaskValue.
using AttentionMask = std::vector<MatFx>;

// Region labelling of the shifted frame: rows and columns split at h - m and
// h - shift; tokens of one window attend only within their own region.
AttentionMask build_shift_mask(std::size_t h, std::size_t w, std::size_t m, std::size_t shift);

struct AttentionParams {
  fusion::FusedLinear q;  // 1/sqrt(head_dim) already folded in
  fusion::FusedLinear k;
  fusion::FusedLinear v;
  fusion::FusedLinear proj;
  std::vector<MatFx> rel_pos_bias;  // per head [M^2 x M^2]; used only when BlockConfig::rel_pos_bias
};

struct FfnParams {
  fusion::FusedLinear fc1;
  fusion::FusedLinear fc2;
  std::optional<fusion::AffineFx> bn1;  // standalone BN after fc1
  std::optional<fusion::AffineFx> bn2;  // standalone BN after fc2
};

struct BlockParams {
  AttentionParams attn;
  FfnParams ffn;
};

// Checks every weight against cfg; throws DomainError on mismatch.
void check_params(const BlockParams& params, const BlockConfig& cfg);

// One window: QKV, per-head scores with zero-padded K^T, mask (+ optional
// relative position bias), SCU softmax, scores.V, head concat, projection,
// saturating shortcut. mask may be null.
MatFx msa_block(const MatFx& x, const AttentionParams& params, const BlockConfig& cfg, const MatFx* mask,
                const mmu::TileConfig& tile = {}, mmu::MmuCounters* counters = nullptr);

// fc1, [bn1], GELU, fc2, [bn2], shortcut. x is any number of tokens.
MatFx ffn(const MatFx& x, const FfnParams& params, std::size_t mlp_ratio, const mmu::TileConfig& tile = {},
          mmu::MmuCounters* counters = nullptr);

// Full block on a feature map: optional cyclic shift, windowed attention,
// reverse, unshift, then FFN on every token.
FeatureMap swin_block(const FeatureMap& x, const BlockParams& params, const BlockConfig& cfg,
                      const mmu::TileConfig& tile = {}, mmu::MmuCounters* counters = nullptr);

// Stride-patch convolution as im2col times the flattened kernel [patch^2 c_in x c_out].
FeatureMap patch_embed(const mmu::ImageFx& image, const fusion::FusedLinear& proj, std::size_t patch = 4,
                       const mmu::TileConfig& tile = {});

// Conv kernel [c_out][c_in][patch][patch] flattened to match im2col columns.
MatReal flatten_conv_weight(std::span<const double> kernel, std::size_t c_out, std::size_t c_in, std::size_t patch);

// 2x2 neighbourhood concat (top-left, bottom-left, top-right, bottom-right)
// then merge [4C x 2C]. Throws DomainError on odd dims.
FeatureMap patch_merging(const FeatureMap& x, const fusion::FusedLinear& merge, const mmu::TileConfig& tile = {});

// Real-valued parameters of one block before fusion: a BN ahead of each
// sublayer (folded into W_Q/W_K/W_V and fc1) and a standalone BN after fc1
// and after fc2.
struct RealBlockParams {
  fusion::BNParams bn_attn;
  fusion::LinearParams wq, wk, wv, proj;
  fusion::BNParams bn_ffn;
  fusion::LinearParams fc1;
  fusion::BNParams bn1;
  fusion::LinearParams fc2;
  fusion::BNParams bn2;
};

RealBlockParams random_real_block_params(const BlockConfig& cfg, Rng& rng);
// Fold the BNs and 1/sqrt(head_dim), then quantize.
BlockParams fuse_block(const RealBlockParams& real, const BlockConfig& cfg);
// random_real_block_params then fuse_block, plus a seeded relative position
// bias when cfg.rel_pos_bias.
BlockParams random_block_params(const BlockConfig& cfg, Rng& rng);
BlockParams zero_block_params(const BlockConfig& cfg);

namespace reference {

FeatureMapReal swin_block(const FeatureMapReal& x, const BlockParams& params, const BlockConfig& cfg);
MatReal msa_block(const MatReal& x, const AttentionParams& params, const BlockConfig& cfg, const MatReal* mask);
MatReal ffn(const MatReal& x, const FfnParams& params);

}  // namespace reference

}  // namespace swinfx::model
