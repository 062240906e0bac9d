// SPDX-FileCopyrightText: © 2026 swinfx contributors
//
// SPDX-License-Identifier: Apache-2.0

#include "swinfx/mmu.hpp"

#include <algorithm>
#include <string>

#include "swinfx/error.hpp"

namespace swinfx::mmu {

namespace {

std::size_t ceil_div(std::size_t a, std::size_t b) { return (a + b - 1) / b; }

std::string shape(const MatFx& m) { return std::to_string(m.rows()) + "x" + std::to_string(m.cols()); }

MatFx multiply(const MatFx& a, const MatFx& b, std::span<const Fx16> bias, const TileConfig& cfg,
               MmuCounters* counters) {
  cfg.validate();
  if (a.cols() != b.rows()) throw DomainError("matmul: shape mismatch " + shape(a) + " * " + shape(b));
  if (!bias.empty() && bias.size() != b.cols()) throw DomainError("matmul: bias length mismatch");

  const std::size_t rows = a.rows();
  const std::size_t inner = a.cols();
  const std::size_t cols = b.cols();
  const std::size_t row_tiles = ceil_div(rows, cfg.m2);
  const std::size_t inner_tiles = ceil_div(inner, cfg.ci);
  const std::size_t col_tiles = ceil_div(cols, cfg.co);

  MatFx out(rows, cols);
  std::vector<Acc48> acc(cfg.m2 * cfg.co);
  for (std::size_t rt = 0; rt < row_tiles; ++rt) {
    for (std::size_t ct = 0; ct < col_tiles; ++ct) {
      std::fill(acc.begin(), acc.end(), Acc48{});
      if (!bias.empty()) {
        for (std::size_t r = 0; r < cfg.m2; ++r)
          for (std::size_t c = 0; c < cfg.co; ++c) {
            const std::size_t col = ct * cfg.co + c;
            if (col < cols) acc[r * cfg.co + c].add_bias(bias[col]);
          }
      }
      for (std::size_t it = 0; it < inner_tiles; ++it) {
        for (std::size_t kk = 0; kk < cfg.ci; ++kk) {
          const std::size_t k = it * cfg.ci + kk;
          if (k >= inner) break;  // zero padding contributes nothing
          for (std::size_t r = 0; r < cfg.m2; ++r) {
            const std::size_t row = rt * cfg.m2 + r;
            if (row >= rows) break;
            const Fx16 av = a(row, k);
            for (std::size_t c = 0; c < cfg.co; ++c) {
              const std::size_t col = ct * cfg.co + c;
              if (col >= cols) break;
              acc[r * cfg.co + c].add_product(av, b(k, col));
            }
          }
        }
      }
      for (std::size_t r = 0; r < cfg.m2; ++r) {
        const std::size_t row = rt * cfg.m2 + r;
        if (row >= rows) break;
        for (std::size_t c = 0; c < cfg.co; ++c) {
          const std::size_t col = ct * cfg.co + c;
          if (col >= cols) break;
          out(row, col) = acc[r * cfg.co + c].fold();
        }
      }
    }
  }

  if (counters != nullptr) {
    MmuCounters local;
    local.tiles = row_tiles * col_tiles * inner_tiles;
    local.cycles = local.tiles * cfg.ci;
    local.issued_macs = local.tiles * cfg.m2 * cfg.ci * cfg.co;
    local.useful_macs = static_cast<std::uint64_t>(rows) * inner * cols;
    *counters += local;
  }
  return out;
}

}  // namespace

void TileConfig::validate() const {
  if (m2 == 0 || ci == 0 || co == 0) throw DomainError("TileConfig: tile sizes must be positive");
}

MmuCounters& MmuCounters::operator+=(const MmuCounters& o) {
  tiles += o.tiles;
  cycles += o.cycles;
  issued_macs += o.issued_macs;
  useful_macs += o.useful_macs;
  return *this;
}

MatFx matmul_tiled(const MatFx& a, const MatFx& b, const TileConfig& cfg, MmuCounters* counters) {
  return multiply(a, b, {}, cfg, counters);
}

MatFx linear(const MatFx& x, const MatFx& w, std::span<const Fx16> bias, const TileConfig& cfg,
             MmuCounters* counters) {
  return multiply(x, w, bias, cfg, counters);
}

MatFx pad_kt(const MatFx& kt, std::size_t co) {
  if (co == 0) throw DomainError("pad_kt: co must be positive");
  const std::size_t padded = ceil_div(kt.cols(), co) * co;
  if (padded == kt.cols()) return kt;
  MatFx out(kt.rows(), padded);
  out.set_col_slice(0, kt);
  return out;
}

MatFx attention_scores(const MatFx& q, const MatFx& kt, const TileConfig& cfg, MmuCounters* counters) {
  if (q.cols() != kt.rows()) throw DomainError("attention_scores: shape mismatch " + shape(q) + " * " + shape(kt));
  const MatFx padded = pad_kt(kt, cfg.co);
  MmuCounters local;
  const MatFx full = matmul_tiled(q, padded, cfg, &local);
  local.useful_macs = static_cast<std::uint64_t>(q.rows()) * q.cols() * kt.cols();
  if (counters != nullptr) *counters += local;
  return full.col_slice(0, kt.cols());
}

MatFx im2col_patch_embed(const ImageFx& image, std::size_t patch) {
  if (patch == 0 || image.h % patch != 0 || image.w % patch != 0) {
    throw DomainError("im2col_patch_embed: " + std::to_string(image.h) + "x" + std::to_string(image.w) +
                      " not divisible by patch " + std::to_string(patch));
  }
  if (image.data.size() != image.c * image.h * image.w) throw DomainError("im2col_patch_embed: bad image buffer");
  const std::size_t gh = image.h / patch;
  const std::size_t gw = image.w / patch;
  const std::size_t per_channel = patch * patch;
  MatFx out(gh * gw, per_channel * image.c);
  for (std::size_t py = 0; py < gh; ++py)
    for (std::size_t px = 0; px < gw; ++px)
      for (std::size_t ch = 0; ch < image.c; ++ch)
        for (std::size_t ky = 0; ky < patch; ++ky)
          for (std::size_t kx = 0; kx < patch; ++kx)
            out(py * gw + px, ch * per_channel + ky * patch + kx) = image.at(ch, py * patch + ky, px * patch + kx);
  return out;
}

}  // namespace swinfx::mmu
