// SPDX-FileCopyrightText: © 2026 swinfx contributors
//
// SPDX-License-Identifier: Apache-2.0

#include "swinfx/model.hpp"

#include <cmath>

#include "swinfx/nonlinear.hpp"

namespace swinfx::model {

namespace {

std::string dims(std::size_t r, std::size_t c) { return std::to_string(r) + "x" + std::to_string(c); }

void check_linear(const fusion::FusedLinear& l, std::size_t in, std::size_t out, const char* name) {
  if (l.w.rows() != in || l.w.cols() != out || l.b.size() != out) {
    throw DomainError(std::string(name) + ": expected " + dims(in, out) + " weights, got " +
                      dims(l.w.rows(), l.w.cols()) + " with " + std::to_string(l.b.size()) + " biases");
  }
}

void check_affine(const std::optional<fusion::AffineFx>& a, std::size_t c, const char* name) {
  if (a && (a->scale.size() != c || a->shift.size() != c)) {
    throw DomainError(std::string(name) + ": expected " + std::to_string(c) + " channels");
  }
}

MatFx add_sat(const MatFx& a, const MatFx& b) {
  MatFx out(a.rows(), a.cols());
  for (std::size_t i = 0; i < a.size(); ++i) out.data()[i] = swinfx::add_sat(a.data()[i], b.data()[i]);
  return out;
}

MatFx project(const MatFx& x, const fusion::FusedLinear& l, const mmu::TileConfig& tile, mmu::MmuCounters* counters) {
  return mmu::linear(x, l.w, l.b, tile, counters);
}

}  // namespace

FeatureMapReal to_real(const FeatureMap& fm) {
  FeatureMapReal out(fm.h, fm.w, fm.c);
  for (std::size_t i = 0; i < fm.data.size(); ++i) out.data[i] = fm.data[i].to_real();
  return out;
}

void BlockConfig::validate() const {
  if (window == 0 || channels == 0 || heads == 0 || mlp_ratio == 0) throw DomainError("BlockConfig: zero size");
  if (channels % heads != 0) throw DomainError("BlockConfig: channels not divisible by heads");
  if (tokens() > nonlinear::kMaxSoftmaxLen) throw DomainError("BlockConfig: window too large for the SCU");
}

AttentionMask build_shift_mask(std::size_t h, std::size_t w, std::size_t m, std::size_t shift) {
  if (m == 0 || h % m != 0 || w % m != 0) throw DomainError("build_shift_mask: dims not divisible by window");
  if (shift >= m) throw DomainError("build_shift_mask: shift must be smaller than the window");
  const std::size_t n = m * m;
  const std::size_t count = (h / m) * (w / m);
  if (shift == 0) return AttentionMask(count, MatFx(n, n));

  auto region = [&](std::size_t p, std::size_t extent) -> std::size_t {
    if (p < extent - m) return 0;
    if (p < extent - shift) return 1;
    return 2;
  };
  FeatureMapT<int> labels(h, w, 1);
  for (std::size_t y = 0; y < h; ++y)
    for (std::size_t x = 0; x < w; ++x) labels.at(y, x, 0) = static_cast<int>(region(y, h) * 3 + region(x, w));

  AttentionMask masks;
  for (const Matrix<int>& win : window_partition(labels, m)) {
    MatFx mask(n, n);
    for (std::size_t i = 0; i < n; ++i)
      for (std::size_t j = 0; j < n; ++j) mask(i, j) = win(i, 0) == win(j, 0) ? Fx16::zero() : nonlinear::kMaskValue;
    masks.push_back(std::move(mask));
  }
  return masks;
}

void check_params(const BlockParams& p, const BlockConfig& cfg) {
  cfg.validate();
  const std::size_t c = cfg.channels;
  check_linear(p.attn.q, c, c, "W_Q");
  check_linear(p.attn.k, c, c, "W_K");
  check_linear(p.attn.v, c, c, "W_V");
  check_linear(p.attn.proj, c, c, "proj");
  check_linear(p.ffn.fc1, c, cfg.hidden(), "fc1");
  check_linear(p.ffn.fc2, cfg.hidden(), c, "fc2");
  check_affine(p.ffn.bn1, cfg.hidden(), "fc1 BN");
  check_affine(p.ffn.bn2, c, "fc2 BN");
  if (cfg.rel_pos_bias) {
    if (p.attn.rel_pos_bias.size() != cfg.heads) throw DomainError("relative position bias: one matrix per head");
    for (const MatFx& b : p.attn.rel_pos_bias)
      if (b.rows() != cfg.tokens() || b.cols() != cfg.tokens())
        throw DomainError("relative position bias: expected " + dims(cfg.tokens(), cfg.tokens()));
  }
}

MatFx msa_block(const MatFx& x, const AttentionParams& params, const BlockConfig& cfg, const MatFx* mask,
                const mmu::TileConfig& tile, mmu::MmuCounters* counters) {
  cfg.validate();
  const std::size_t n = cfg.tokens();
  if (x.rows() != n || x.cols() != cfg.channels) {
    throw DomainError("msa_block: expected window " + dims(n, cfg.channels) + ", got " + dims(x.rows(), x.cols()));
  }
  if (mask != nullptr && (mask->rows() != n || mask->cols() != n)) throw DomainError("msa_block: mask shape");

  const MatFx q = project(x, params.q, tile, counters);
  const MatFx k = project(x, params.k, tile, counters);
  const MatFx v = project(x, params.v, tile, counters);

  const std::size_t d = cfg.head_dim();
  MatFx heads(n, cfg.channels);
  for (std::size_t h = 0; h < cfg.heads; ++h) {
    const MatFx qh = q.col_slice(h * d, d);
    const MatFx kt = k.col_slice(h * d, d).transposed();
    MatFx scores = mmu::attention_scores(qh, kt, tile, counters);
    if (cfg.rel_pos_bias) {
      const MatFx& bias = params.rel_pos_bias.at(h);
      for (std::size_t i = 0; i < scores.size(); ++i)
        scores.data()[i] = swinfx::add_sat(scores.data()[i], bias.data()[i]);
    }
    MatFx attn(n, n);
    for (std::size_t r = 0; r < n; ++r) {
      const std::span<const Fx16> mrow = mask != nullptr ? mask->row(r) : std::span<const Fx16>{};
      const std::vector<Fx16> p = nonlinear::softmax_row(scores.row(r), mrow);
      std::copy(p.begin(), p.end(), attn.row(r).begin());
    }
    heads.set_col_slice(h * d, mmu::matmul_tiled(attn, v.col_slice(h * d, d), tile, counters));
  }
  return add_sat(x, project(heads, params.proj, tile, counters));
}

MatFx ffn(const MatFx& x, const FfnParams& params, std::size_t mlp_ratio, const mmu::TileConfig& tile,
          mmu::MmuCounters* counters) {
  const std::size_t c = x.cols();
  check_linear(params.fc1, c, c * mlp_ratio, "fc1");
  check_linear(params.fc2, c * mlp_ratio, c, "fc2");
  check_affine(params.bn1, c * mlp_ratio, "fc1 BN");
  check_affine(params.bn2, c, "fc2 BN");

  MatFx hidden = project(x, params.fc1, tile, counters);
  if (params.bn1) hidden = fusion::apply_affine(hidden, *params.bn1);
  for (Fx16& e : hidden.data()) e = nonlinear::gelu(e);
  MatFx out = project(hidden, params.fc2, tile, counters);
  if (params.bn2) out = fusion::apply_affine(out, *params.bn2);
  return add_sat(x, out);
}

FeatureMap swin_block(const FeatureMap& x, const BlockParams& params, const BlockConfig& cfg,
                      const mmu::TileConfig& tile, mmu::MmuCounters* counters) {
  check_params(params, cfg);
  if (x.c != cfg.channels) throw DomainError("swin_block: channel mismatch");
  const std::size_t m = cfg.window;
  const long s = static_cast<long>(cfg.shift());

  const FeatureMap shifted = s != 0 ? cyclic_shift(x, -s, -s) : x;
  std::vector<MatFx> windows = window_partition(shifted, m);
  const AttentionMask masks = build_shift_mask(x.h, x.w, m, cfg.shift());
  for (std::size_t i = 0; i < windows.size(); ++i) {
    windows[i] = msa_block(windows[i], params.attn, cfg, s != 0 ? &masks[i] : nullptr, tile, counters);
  }
  FeatureMap attended = window_reverse(windows, x.h, x.w, m);
  if (s != 0) attended = cyclic_shift(attended, s, s);

  return FeatureMap::from_tokens(ffn(attended.tokens(), params.ffn, cfg.mlp_ratio, tile, counters), x.h, x.w);
}

FeatureMap patch_embed(const mmu::ImageFx& image, const fusion::FusedLinear& proj, std::size_t patch,
                       const mmu::TileConfig& tile) {
  const MatFx cols = mmu::im2col_patch_embed(image, patch);
  if (proj.w.rows() != cols.cols()) {
    throw DomainError("patch_embed: kernel expects " + std::to_string(proj.w.rows()) + " inputs, im2col gives " +
                      std::to_string(cols.cols()));
  }
  return FeatureMap::from_tokens(mmu::linear(cols, proj.w, proj.b, tile), image.h / patch, image.w / patch);
}

MatReal flatten_conv_weight(std::span<const double> kernel, std::size_t c_out, std::size_t c_in, std::size_t patch) {
  const std::size_t taps = patch * patch;
  if (kernel.size() != c_out * c_in * taps) throw DomainError("flatten_conv_weight: kernel size mismatch");
  MatReal w(c_in * taps, c_out);
  for (std::size_t o = 0; o < c_out; ++o)
    for (std::size_t i = 0; i < c_in * taps; ++i) w(i, o) = kernel[o * c_in * taps + i];
  return w;
}

FeatureMap patch_merging(const FeatureMap& x, const fusion::FusedLinear& merge, const mmu::TileConfig& tile) {
  if (x.h % 2 != 0 || x.w % 2 != 0) throw DomainError("patch_merging: odd spatial dims");
  const std::size_t c = x.c;
  if (merge.w.rows() != 4 * c) throw DomainError("patch_merging: merge weights must have 4C rows");
  const std::size_t oh = x.h / 2;
  const std::size_t ow = x.w / 2;
  MatFx cat(oh * ow, 4 * c);
  static constexpr std::size_t kOffsets[4][2] = {{0, 0}, {1, 0}, {0, 1}, {1, 1}};
  for (std::size_t y = 0; y < oh; ++y)
    for (std::size_t xx = 0; xx < ow; ++xx)
      for (std::size_t part = 0; part < 4; ++part)
        for (std::size_t ch = 0; ch < c; ++ch)
          cat(y * ow + xx, part * c + ch) = x.at(2 * y + kOffsets[part][0], 2 * xx + kOffsets[part][1], ch);
  return FeatureMap::from_tokens(mmu::linear(cat, merge.w, merge.b, tile), oh, ow);
}

namespace {

fusion::LinearParams random_linear(std::size_t in, std::size_t out, Rng& rng) {
  fusion::LinearParams l{MatReal(in, out), std::vector<double>(out)};
  const double sd = 1.0 / std::sqrt(static_cast<double>(in));
  for (double& v : l.w.data()) v = rng.normal(0.0, sd);
  for (double& v : l.b) v = rng.normal(0.0, 0.02);
  return l;
}

fusion::BNParams random_bn(std::size_t c, Rng& rng) {
  fusion::BNParams bn;
  bn.eps = 1e-5;
  for (std::size_t i = 0; i < c; ++i) {
    bn.gamma.push_back(rng.uniform(0.8, 1.2));
    bn.beta.push_back(rng.normal(0.0, 0.05));
    bn.mean.push_back(rng.normal(0.0, 0.1));
    bn.var.push_back(rng.uniform(0.5, 1.5));
  }
  return bn;
}

fusion::FusedLinear zero_linear(std::size_t in, std::size_t out) {
  return fusion::FusedLinear{MatFx(in, out), std::vector<Fx16>(out), 0, "zero"};
}

}  // namespace

RealBlockParams random_real_block_params(const BlockConfig& cfg, Rng& rng) {
  cfg.validate();
  const std::size_t c = cfg.channels;
  RealBlockParams r;
  r.bn_attn = random_bn(c, rng);
  r.wq = random_linear(c, c, rng);
  r.wk = random_linear(c, c, rng);
  r.wv = random_linear(c, c, rng);
  r.proj = random_linear(c, c, rng);
  r.bn_ffn = random_bn(c, rng);
  r.fc1 = random_linear(c, cfg.hidden(), rng);
  r.bn1 = random_bn(cfg.hidden(), rng);
  r.fc2 = random_linear(cfg.hidden(), c, rng);
  r.bn2 = random_bn(c, rng);
  return r;
}

BlockParams fuse_block(const RealBlockParams& r, const BlockConfig& cfg) {
  cfg.validate();
  BlockParams p;
  p.attn.q = fusion::quantize_linear(fusion::fold_q_scale(fusion::fuse_bn_linear(r.bn_attn, r.wq), cfg.head_dim()),
                                     "attn BN; 1/sqrt(d)");
  p.attn.k = fusion::quantize_linear(fusion::fuse_bn_linear(r.bn_attn, r.wk), "attn BN");
  p.attn.v = fusion::quantize_linear(fusion::fuse_bn_linear(r.bn_attn, r.wv), "attn BN");
  p.attn.proj = fusion::quantize_linear(r.proj);
  p.ffn.fc1 = fusion::quantize_linear(fusion::fuse_bn_linear(r.bn_ffn, r.fc1), "ffn BN");
  p.ffn.bn1 = fusion::quantize_bn_affine(r.bn1);
  p.ffn.fc2 = fusion::quantize_linear(r.fc2);
  p.ffn.bn2 = fusion::quantize_bn_affine(r.bn2);
  return p;
}

BlockParams random_block_params(const BlockConfig& cfg, Rng& rng) {
  const RealBlockParams real = random_real_block_params(cfg, rng);
  BlockParams p = fuse_block(real, cfg);
  if (cfg.rel_pos_bias) {
    for (std::size_t h = 0; h < cfg.heads; ++h) {
      MatFx b(cfg.tokens(), cfg.tokens());
      for (Fx16& e : b.data()) e = Fx16::from_real(rng.normal(0.0, 0.1));
      p.attn.rel_pos_bias.push_back(std::move(b));
    }
  }
  return p;
}

BlockParams zero_block_params(const BlockConfig& cfg) {
  cfg.validate();
  const std::size_t c = cfg.channels;
  BlockParams p;
  p.attn.q = zero_linear(c, c);
  p.attn.k = zero_linear(c, c);
  p.attn.v = zero_linear(c, c);
  p.attn.proj = zero_linear(c, c);
  p.ffn.fc1 = zero_linear(c, cfg.hidden());
  p.ffn.fc2 = zero_linear(cfg.hidden(), c);
  if (cfg.rel_pos_bias) p.attn.rel_pos_bias.assign(cfg.heads, MatFx(cfg.tokens(), cfg.tokens()));
  return p;
}

namespace reference {

namespace {

MatReal linear(const MatReal& x, const fusion::FusedLinear& l) {
  const MatReal w = swinfx::to_real(l.w);
  MatReal y(x.rows(), w.cols());
  for (std::size_t r = 0; r < x.rows(); ++r)
    for (std::size_t j = 0; j < w.cols(); ++j) {
      double acc = l.b[j].to_real();
      for (std::size_t i = 0; i < w.rows(); ++i) acc += x(r, i) * w(i, j);
      y(r, j) = acc;
    }
  return y;
}

MatReal matmul(const MatReal& a, const MatReal& b) {
  MatReal y(a.rows(), b.cols());
  for (std::size_t r = 0; r < a.rows(); ++r)
    for (std::size_t j = 0; j < b.cols(); ++j) {
      double acc = 0.0;
      for (std::size_t i = 0; i < a.cols(); ++i) acc += a(r, i) * b(i, j);
      y(r, j) = acc;
    }
  return y;
}

void affine(MatReal& x, const fusion::AffineFx& a) {
  for (std::size_t r = 0; r < x.rows(); ++r)
    for (std::size_t c = 0; c < x.cols(); ++c) x(r, c) = x(r, c) * a.scale[c].to_real() + a.shift[c].to_real();
}

}  // namespace

MatReal msa_block(const MatReal& x, const AttentionParams& params, const BlockConfig& cfg, const MatReal* mask) {
  const std::size_t n = cfg.tokens();
  const MatReal q = linear(x, params.q);
  const MatReal k = linear(x, params.k);
  const MatReal v = linear(x, params.v);
  const std::size_t d = cfg.head_dim();
  MatReal heads(n, cfg.channels);
  for (std::size_t h = 0; h < cfg.heads; ++h) {
    MatReal scores = matmul(q.col_slice(h * d, d), k.col_slice(h * d, d).transposed());
    if (cfg.rel_pos_bias) {
      const MatFx& bias = params.rel_pos_bias.at(h);
      for (std::size_t i = 0; i < scores.size(); ++i) scores.data()[i] += bias.data()[i].to_real();
    }
    if (mask != nullptr) {
      for (std::size_t i = 0; i < scores.size(); ++i) scores.data()[i] += mask->data()[i];
    }
    MatReal attn(n, n);
    for (std::size_t r = 0; r < n; ++r) {
      const std::vector<double> p = nonlinear::softmax_reference(scores.row(r));
      std::copy(p.begin(), p.end(), attn.row(r).begin());
    }
    heads.set_col_slice(h * d, matmul(attn, v.col_slice(h * d, d)));
  }
  MatReal out = linear(heads, params.proj);
  for (std::size_t i = 0; i < out.size(); ++i) out.data()[i] += x.data()[i];
  return out;
}

MatReal ffn(const MatReal& x, const FfnParams& params) {
  MatReal hidden = linear(x, params.fc1);
  if (params.bn1) affine(hidden, *params.bn1);
  for (double& e : hidden.data()) e = nonlinear::gelu_reference(e);
  MatReal out = linear(hidden, params.fc2);
  if (params.bn2) affine(out, *params.bn2);
  for (std::size_t i = 0; i < out.size(); ++i) out.data()[i] += x.data()[i];
  return out;
}

FeatureMapReal swin_block(const FeatureMapReal& x, const BlockParams& params, const BlockConfig& cfg) {
  check_params(params, cfg);
  if (x.c != cfg.channels) throw DomainError("reference::swin_block: channel mismatch");
  const std::size_t m = cfg.window;
  const long s = static_cast<long>(cfg.shift());
  const FeatureMapReal shifted = s != 0 ? cyclic_shift(x, -s, -s) : x;
  std::vector<MatReal> windows = window_partition(shifted, m);
  const AttentionMask masks = build_shift_mask(x.h, x.w, m, cfg.shift());
  for (std::size_t i = 0; i < windows.size(); ++i) {
    const MatReal mask = swinfx::to_real(masks[i]);
    windows[i] = msa_block(windows[i], params.attn, cfg, s != 0 ? &mask : nullptr);
  }
  FeatureMapReal attended = window_reverse(windows, x.h, x.w, m);
  if (s != 0) attended = cyclic_shift(attended, s, s);
  return FeatureMapReal::from_tokens(ffn(attended.tokens(), params.ffn), x.h, x.w);
}

}  // namespace reference

}  // namespace swinfx::model
