// SPDX-FileCopyrightText: © 2026 swinfx contributors
//
// SPDX-License-Identifier: Apache-2.0

#pragma once

// The command layer behind the swinfx executable. Each cmd_* writes its
// reports under RunConfig::out and returns a process exit code; the sweep
// and run functions underneath return the numbers for tests to inspect.

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include "swinfx/costmodel.hpp"
#include "swinfx/mmu.hpp"
#include "swinfx/model.hpp"

namespace swinfx::cli {

enum ExitCode : int { kOk = 0, kConfigError = 2, kIoError = 3, kInvariantError = 4 };

struct RunConfig {
  std::string command;
  std::filesystem::path out = "swinfx_out";
  std::filesystem::path manifest;
  std::filesystem::path config;  // block run config (key = value)
  std::string preset = "swin-t";
  std::uint64_t seed = 1;
  bool random = false;
  std::optional<std::size_t> blocks;  // overrides the run config
  std::optional<std::size_t> ci;
  std::optional<std::size_t> co;
  // gelu sweep range, in Q6.10 steps
  double gelu_lo = -8.0;
  double gelu_hi = 8.0;
  std::size_t softmax_rows = 100000;
  std::size_t softmax_len = 49;
  double softmax_lo = -8.0;
  double softmax_hi = 8.0;

  mmu::TileConfig tile() const;
  // Canonical text; hashed into every CSV preamble.
  std::string to_text() const;
};

struct KernelSweep {
  std::size_t exp2_rows = 0;
  double exp2_max_rel = 0.0;       // outputs with exact value >= 2^-4
  double exp2_max_rel_full = 0.0;  // every in-domain input
  double exp2_max_abs = 0.0;
  double exp2_mean_rel = 0.0;
  bool exp2_within_full_bound = true;  // rel <= 2% or abs <= 1 ulp everywhere

  std::size_t gelu_rows = 0;
  double gelu_max_abs = 0.0;
  double gelu_mean_abs = 0.0;
  double gelu_argmax = 0.0;
  bool gelu_monotone_nonneg = true;
  bool gelu_in_envelope = true;  // within [min(0, x), max(0, x)] widened by the max error
  double gelu_at_zero = 0.0;

  std::size_t softmax_rows = 0;
  double softmax_max_abs = 0.0;
  double softmax_mean_abs = 0.0;
  double softmax_sum_min = 0.0;
  double softmax_sum_max = 0.0;
  double softmax_max_sum_dev = 0.0;
  std::size_t softmax_rows_outside = 0;  // |sum - 1| > 0.05
  bool softmax_argmax_preserved = true;

  std::string to_text() const;
};

// CSV bodies are produced only for the non-null pointers.
KernelSweep sweep_kernels(const RunConfig& cfg, std::string* exp2_csv = nullptr, std::string* gelu_csv = nullptr,
                          std::string* softmax_csv = nullptr);

// Toy block run settings, read from the key = value run config.
struct BlockRunSpec {
  std::size_t grid = 14;  // h = w
  std::size_t window = 7;
  std::size_t channels = 32;
  std::size_t heads = 1;
  std::size_t mlp_ratio = 4;
  std::size_t blocks = 2;
  bool alternate_shift = true;  // W-MSA, SW-MSA, W-MSA, ...
  bool rel_pos_bias = false;

  model::BlockConfig block(std::size_t index) const;
  static BlockRunSpec parse(const std::string& text);
  std::string to_text() const;
};

struct BlockDivergence {
  std::size_t index = 0;
  bool shifted = false;
  double max_abs = 0.0;
  double mean_abs = 0.0;
  bool shape_ok = true;
};

struct BlockRun {
  BlockRunSpec spec;
  std::vector<BlockDivergence> blocks;
  mmu::MmuCounters counters;
  bool identity = false;  // fixed output bit-equal to input

  std::string to_text() const;
  std::string to_csv() const;
};

std::vector<model::BlockParams> random_params(const BlockRunSpec& spec, std::uint64_t seed);
// params.size() blocks from the seeded input.
BlockRun run_blocks(const BlockRunSpec& spec, const std::vector<model::BlockParams>& params, std::uint64_t seed,
                    const mmu::TileConfig& tile = {});

// Writes a seeded real-valued manifest (f64 blobs) for spec.blocks blocks.
// identity_bn swaps every BN for the identity.
void write_real_manifest(const std::filesystem::path& dir, const BlockRunSpec& spec, std::uint64_t seed,
                         bool identity_bn = false);

struct FuseLayerReport {
  std::string layer;
  std::string role;
  std::string note;
  std::size_t saturated = 0;
  double fused_vs_sequential_rel = 0.0;  // double precision
  double fixed_vs_sequential_abs = 0.0;  // quantized fused path
};

struct FuseReport {
  std::vector<FuseLayerReport> layers;
  std::size_t saturated_total = 0;
  double max_fused_vs_sequential_rel = 0.0;
  double max_fixed_vs_sequential_abs = 0.0;

  std::string to_text() const;
};

// Reads the real manifest at in, writes blobs and "fused.manifest" to out.
FuseReport fuse_manifest(const std::filesystem::path& in, const std::filesystem::path& out, std::uint64_t seed);

int cmd_kernels(const RunConfig& cfg, std::ostream& log);
int cmd_block(const RunConfig& cfg, std::ostream& log);
int cmd_cost(const RunConfig& cfg, std::ostream& log);
int cmd_fuse(const RunConfig& cfg, std::ostream& log);
int cmd_synth(const RunConfig& cfg, std::ostream& log);

// Runs cfg.command, mapping ConfigError, IoError and DomainError to exit
// codes 2, 3 and 4.
int dispatch(const RunConfig& cfg, std::ostream& log, std::ostream& err);

}  // namespace swinfx::cli
