// SPDX-FileCopyrightText: © 2026 swinfx contributors
//
// SPDX-License-Identifier: Apache-2.0

#pragma once

// Operation counts, the zero-padding waste ratio U, and MMU/FMU accounting
// for Swin-style model shapes.

#include <cstddef>
#include <cstdint>
#include <string>
#include <string_view>
#include <vector>

#include "swinfx/mmu.hpp"

namespace swinfx::cost {

struct ModelShape {
  std::string name;
  std::vector<std::size_t> depths;  // blocks per stage
  std::size_t channels = 96;        // stage-1 C; doubles every stage
  std::size_t image = 224;
  std::size_t patch = 4;
  std::size_t window = 7;
  std::size_t mlp_ratio = 4;
  std::size_t head_dim = 32;
  std::size_t co = 32;

  std::size_t stages() const { return depths.size(); }
  std::size_t stage_channels(std::size_t s) const { return channels << s; }
  // Token grid side at stage s (stage 0 = image / patch).
  std::size_t stage_side(std::size_t s) const { return (image / patch) >> s; }
  void validate() const;
};

// "swin-t", "swin-s", "swin-b" or "toy"; throws ConfigError otherwise.
ModelShape preset(std::string_view name);
std::vector<std::string> preset_names();

std::uint64_t complexity_wmsa(std::uint64_t h, std::uint64_t w, std::uint64_t c, std::uint64_t m);
// 2 * mlp_ratio * hwC^2 (8hwC^2 at the default ratio of 4).
std::uint64_t complexity_ffn(std::uint64_t h, std::uint64_t w, std::uint64_t c, std::uint64_t mlp_ratio = 4);
std::uint64_t complexity_qk(std::uint64_t h, std::uint64_t w, std::uint64_t c, std::uint64_t m);
std::uint64_t complexity_qk_padded(std::uint64_t h, std::uint64_t w, std::uint64_t c, std::uint64_t co);

// (2 co hwC - M^2 hwC) / (12 hwC^2 + 2 M^2 hwC). The padded width 2co is
// only meaningful when co < M^2 <= 2co; throws DomainError outside that.
double invalid_ratio(std::uint64_t h, std::uint64_t w, std::uint64_t c, std::uint64_t m, std::uint64_t co);

// Headline U: the formula at the stage-1 grid and base channel count.
double invalid_ratio(const ModelShape& shape);
// Total invalid MACs over total linear MACs across every block of every stage.
double invalid_ratio_aggregate(const ModelShape& shape);

int fmu_cycles(std::size_t n);
std::uint64_t mmu_multipliers(const mmu::TileConfig& cfg);
// ceil(C_I / ci) * ceil(C_O / co) * ci for one m2-row tile.
std::uint64_t mmu_cycles(std::uint64_t c_in, std::uint64_t c_out, const mmu::TileConfig& cfg);
// All MMU cycles one Swin block at stage s spends over all its windows.
std::uint64_t mmu_block_cycles(const ModelShape& shape, std::size_t stage, const mmu::TileConfig& cfg);

struct StageCost {
  std::size_t stage = 0;
  std::size_t depth = 0;
  std::size_t side = 0;
  std::size_t channels = 0;
  std::uint64_t wmsa = 0;
  std::uint64_t ffn = 0;
  std::uint64_t qk = 0;
  std::uint64_t qk_padded = 0;
  std::uint64_t invalid = 0;  // per block
  std::uint64_t linear = 0;   // per block, the ratio denominator
  double ratio = 0.0;
  std::uint64_t mmu_cycles = 0;  // per block
};

struct CostReport {
  ModelShape shape;
  mmu::TileConfig tile;
  std::vector<StageCost> stages;
  double invalid_ratio = 0.0;
  double invalid_ratio_aggregate = 0.0;
  std::uint64_t multipliers = 0;
  int fmu_cycles = 0;
  std::uint64_t mmu_cycles_total = 0;

  // "key: value" lines.
  std::string to_text() const;
  // One row per stage, with a header.
  std::string to_csv() const;
};

CostReport cost_report(const ModelShape& shape, const mmu::TileConfig& tile = {});

}  // namespace swinfx::cost
