// SPDX-FileCopyrightText: © 2026 swinfx contributors
//
// SPDX-License-Identifier: Apache-2.0

#include "swinfx/costmodel.hpp"

#include <cstdio>
#include <sstream>

#include "swinfx/approx.hpp"
#include "swinfx/error.hpp"

namespace swinfx::cost {

namespace {

std::uint64_t ceil_div(std::uint64_t a, std::uint64_t b) { return (a + b - 1) / b; }

std::uint64_t block_invalid(std::uint64_t hw, std::uint64_t c, std::uint64_t m, std::uint64_t co) {
  return 2 * co * hw * c - m * m * hw * c;
}

std::uint64_t block_linear(std::uint64_t hw, std::uint64_t c, std::uint64_t m) {
  return 12 * hw * c * c + 2 * m * m * hw * c;
}

void check_padding_regime(std::uint64_t m, std::uint64_t co) {
  if (co == 0 || !(co < m * m && m * m <= 2 * co)) {
    throw DomainError("invalid_ratio: formula assumes co < M^2 <= 2co (M=" + std::to_string(m) +
                      ", co=" + std::to_string(co) + ")");
  }
}

std::string fmt_ratio(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.6f", v);
  return buf;
}

}  // namespace

void ModelShape::validate() const {
  if (depths.empty()) throw ConfigError("ModelShape: no stages");
  if (channels == 0 || window == 0 || patch == 0 || head_dim == 0 || co == 0 || mlp_ratio == 0) {
    throw ConfigError("ModelShape: zero size");
  }
  for (std::size_t s = 0; s < stages(); ++s) {
    if (stage_side(s) == 0 || stage_side(s) % window != 0) {
      throw ConfigError("ModelShape: stage " + std::to_string(s) + " grid not divisible by window");
    }
    if (stage_channels(s) % head_dim != 0) throw ConfigError("ModelShape: channels not divisible by head_dim");
  }
}

ModelShape preset(std::string_view name) {
  if (name == "swin-t") return ModelShape{"swin-t", {2, 2, 6, 2}, 96};
  if (name == "swin-s") return ModelShape{"swin-s", {2, 2, 18, 2}, 96};
  if (name == "swin-b") return ModelShape{"swin-b", {2, 2, 18, 2}, 128};
  if (name == "toy") return ModelShape{"toy", {2, 2}, 32, 56};
  throw ConfigError("unknown preset '" + std::string(name) + "' (expected swin-t, swin-s, swin-b or toy)");
}

std::vector<std::string> preset_names() { return {"swin-t", "swin-s", "swin-b", "toy"}; }

std::uint64_t complexity_wmsa(std::uint64_t h, std::uint64_t w, std::uint64_t c, std::uint64_t m) {
  return 4 * h * w * c * c + 2 * m * m * h * w * c;
}

std::uint64_t complexity_ffn(std::uint64_t h, std::uint64_t w, std::uint64_t c, std::uint64_t mlp_ratio) {
  return 2 * mlp_ratio * h * w * c * c;
}

std::uint64_t complexity_qk(std::uint64_t h, std::uint64_t w, std::uint64_t c, std::uint64_t m) {
  return m * m * h * w * c;
}

std::uint64_t complexity_qk_padded(std::uint64_t h, std::uint64_t w, std::uint64_t c, std::uint64_t co) {
  return 2 * co * h * w * c;
}

double invalid_ratio(std::uint64_t h, std::uint64_t w, std::uint64_t c, std::uint64_t m, std::uint64_t co) {
  check_padding_regime(m, co);
  const std::uint64_t hw = h * w;
  return static_cast<double>(block_invalid(hw, c, m, co)) / static_cast<double>(block_linear(hw, c, m));
}

double invalid_ratio(const ModelShape& shape) {
  shape.validate();
  const std::uint64_t side = shape.stage_side(0);
  return invalid_ratio(side, side, shape.channels, shape.window, shape.co);
}

double invalid_ratio_aggregate(const ModelShape& shape) {
  shape.validate();
  check_padding_regime(shape.window, shape.co);
  std::uint64_t invalid = 0;
  std::uint64_t linear = 0;
  for (std::size_t s = 0; s < shape.stages(); ++s) {
    const std::uint64_t side = shape.stage_side(s);
    const std::uint64_t c = shape.stage_channels(s);
    invalid += shape.depths[s] * block_invalid(side * side, c, shape.window, shape.co);
    linear += shape.depths[s] * block_linear(side * side, c, shape.window);
  }
  return static_cast<double>(invalid) / static_cast<double>(linear);
}

int fmu_cycles(std::size_t n) { return approx::fmu_cycles(n); }

std::uint64_t mmu_multipliers(const mmu::TileConfig& cfg) { return static_cast<std::uint64_t>(cfg.m2) * cfg.co; }

std::uint64_t mmu_cycles(std::uint64_t c_in, std::uint64_t c_out, const mmu::TileConfig& cfg) {
  cfg.validate();
  return ceil_div(c_in, cfg.ci) * ceil_div(c_out, cfg.co) * cfg.ci;
}

std::uint64_t mmu_block_cycles(const ModelShape& shape, std::size_t stage, const mmu::TileConfig& cfg) {
  const std::uint64_t side = shape.stage_side(stage);
  const std::uint64_t c = shape.stage_channels(stage);
  const std::uint64_t n = shape.window * shape.window;
  const std::uint64_t heads = c / shape.head_dim;
  const std::uint64_t d = shape.head_dim;
  const std::uint64_t windows = (side / shape.window) * (side / shape.window);
  const std::uint64_t row_tiles = ceil_div(n, cfg.m2);
  std::uint64_t per_window = 4 * mmu_cycles(c, c, cfg);            // Q, K, V, projection
  per_window += heads * mmu_cycles(d, n, cfg);                      // q.k^T, K^T padded to co
  per_window += heads * mmu_cycles(n, d, cfg);                      // scores.V
  per_window += mmu_cycles(c, shape.mlp_ratio * c, cfg);            // fc1
  per_window += mmu_cycles(shape.mlp_ratio * c, c, cfg);            // fc2
  return windows * row_tiles * per_window;
}

CostReport cost_report(const ModelShape& shape, const mmu::TileConfig& tile) {
  shape.validate();
  CostReport r;
  r.shape = shape;
  r.tile = tile;
  for (std::size_t s = 0; s < shape.stages(); ++s) {
    StageCost sc;
    sc.stage = s;
    sc.depth = shape.depths[s];
    sc.side = shape.stage_side(s);
    sc.channels = shape.stage_channels(s);
    const std::uint64_t h = sc.side;
    sc.wmsa = complexity_wmsa(h, h, sc.channels, shape.window);
    sc.ffn = complexity_ffn(h, h, sc.channels, shape.mlp_ratio);
    sc.qk = complexity_qk(h, h, sc.channels, shape.window);
    sc.qk_padded = complexity_qk_padded(h, h, sc.channels, shape.co);
    sc.invalid = sc.qk_padded - sc.qk;
    sc.linear = block_linear(h * h, sc.channels, shape.window);
    sc.ratio = invalid_ratio(h, h, sc.channels, shape.window, shape.co);
    sc.mmu_cycles = mmu_block_cycles(shape, s, tile);
    r.mmu_cycles_total += sc.depth * sc.mmu_cycles;
    r.stages.push_back(sc);
  }
  r.invalid_ratio = invalid_ratio(shape);
  r.invalid_ratio_aggregate = invalid_ratio_aggregate(shape);
  r.multipliers = mmu_multipliers(tile);
  r.fmu_cycles = fmu_cycles(shape.window * shape.window);
  return r;
}

std::string CostReport::to_text() const {
  std::ostringstream out;
  out << "preset: " << shape.name << '\n';
  out << "depths: ";
  for (std::size_t s = 0; s < shape.depths.size(); ++s) out << (s ? "," : "") << shape.depths[s];
  out << '\n';
  out << "channels: " << shape.channels << '\n';
  out << "image: " << shape.image << '\n';
  out << "window: " << shape.window << '\n';
  out << "mlp_ratio: " << shape.mlp_ratio << '\n';
  out << "tile.m2: " << tile.m2 << '\n';
  out << "tile.ci: " << tile.ci << '\n';
  out << "tile.co: " << tile.co << '\n';
  for (const StageCost& s : stages) {
    const std::string p = "stage" + std::to_string(s.stage) + ".";
    out << p << "depth: " << s.depth << '\n';
    out << p << "grid: " << s.side << "x" << s.side << '\n';
    out << p << "channels: " << s.channels << '\n';
    out << p << "omega_wmsa: " << s.wmsa << '\n';
    out << p << "omega_ffn: " << s.ffn << '\n';
    out << p << "omega_qk: " << s.qk << '\n';
    out << p << "omega_qk_padded: " << s.qk_padded << '\n';
    out << p << "invalid_ratio: " << fmt_ratio(s.ratio) << '\n';
    out << p << "mmu_cycles_per_block: " << s.mmu_cycles << '\n';
  }
  out << "invalid_ratio: " << fmt_ratio(invalid_ratio) << '\n';
  out << "invalid_ratio_percent: " << fmt_ratio(100.0 * invalid_ratio) << '\n';
  out << "invalid_ratio_aggregate: " << fmt_ratio(invalid_ratio_aggregate) << '\n';
  out << "mmu_multipliers: " << multipliers << '\n';
  out << "fmu_cycles: " << fmu_cycles << '\n';
  out << "mmu_cycles_total: " << mmu_cycles_total << '\n';
  return out.str();
}

std::string CostReport::to_csv() const {
  std::ostringstream out;
  out << "preset,stage,depth,grid,channels,omega_wmsa,omega_ffn,omega_qk,omega_qk_padded,invalid_ratio,"
         "mmu_cycles_per_block\n";
  for (const StageCost& s : stages) {
    out << shape.name << ',' << s.stage << ',' << s.depth << ',' << s.side << ',' << s.channels << ',' << s.wmsa
        << ',' << s.ffn << ',' << s.qk << ',' << s.qk_padded << ',' << fmt_ratio(s.ratio) << ',' << s.mmu_cycles
        << '\n';
  }
  return out.str();
}

}  // namespace swinfx::cost
