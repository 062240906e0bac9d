// SPDX-FileCopyrightText: © 2026 swinfx contributors
//
// SPDX-License-Identifier: Apache-2.0

#pragma once

// Tensor blobs, parameter manifests and report helpers.
//
// A blob is a text header line "fx16 <rows> <cols>\n" (or "f64 ...")
// followed by rows * cols little-endian values, row-major.

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <map>
#include <string>
#include <string_view>
#include <vector>

#include "swinfx/fusion.hpp"
#include "swinfx/matrix.hpp"
#include "swinfx/model.hpp"

namespace swinfx::io {

inline constexpr std::string_view kToolVersion = "0.1.0";

std::string read_text(const std::filesystem::path& path);
void write_text(const std::filesystem::path& path, std::string_view text);

// Serialization to and from bytes; parse errors throw ConfigError.
std::string encode_blob(const MatFx& m);
std::string encode_blob(const MatReal& m);
MatFx decode_blob_fx(std::string_view bytes);
MatReal decode_blob_f64(std::string_view bytes);

void write_blob(const std::filesystem::path& path, const MatFx& m);
void write_blob(const std::filesystem::path& path, const MatReal& m);
MatFx read_blob_fx(const std::filesystem::path& path);
MatReal read_blob_f64(const std::filesystem::path& path);
// A [1 x n] or [n x 1] blob as a flat vector.
std::vector<double> read_vector_f64(const std::filesystem::path& path);

std::uint64_t fnv1a(std::string_view bytes);
std::string hex64(std::uint64_t v);
// First line of every CSV: "# swinfx <version> config <hash>".
std::string csv_preamble(std::string_view config_text);

// "key = value" lines; '#' starts a comment. Duplicate keys throw ConfigError.
std::map<std::string, std::string> parse_key_values(std::string_view text);

// Fused manifest: one "<layer> <weight_blob> <bias_blob> <role>" line per
// layer ("-" for an absent bias), plus optional "option rel_pos_bias on|off".
// Layer names are "<prefix>.<name>"; block layers use prefix "block<i>".
struct FusedEntry {
  std::string layer;
  std::string weight;
  std::string bias;
  std::string role;
};

struct FusedManifest {
  std::vector<FusedEntry> entries;
  bool rel_pos_bias = false;
  std::filesystem::path base_dir;  // blob paths are relative to this

  const FusedEntry* find(std::string_view prefix, std::string_view role) const;
  std::string to_text() const;
};

FusedManifest parse_fused_manifest(std::string_view text, const std::filesystem::path& base_dir = {});
FusedManifest load_fused_manifest(const std::filesystem::path& path);

bool is_block_role(std::string_view role);
bool is_known_role(std::string_view role);

// Writes one block's blobs into dir as "<prefix>.<role>.{w,b}.fx16" and
// appends the matching manifest entries.
void save_block_params(const std::filesystem::path& dir, const std::string& prefix, const model::BlockParams& params,
                       FusedManifest& manifest);
// Throws ConfigError when a role is missing or a blob does not fit cfg.
model::BlockParams load_block_params(const FusedManifest& manifest, const std::string& prefix,
                                     const model::BlockConfig& cfg);

// Real-valued parameter manifest consumed by the fuse command:
//   head_dim <n>
//   linear <layer> <role> <weight.f64> <bias.f64>
//   bn <name> <target> <gamma> <beta> <mean> <var> <eps>
// target is a comma-separated list of linear layers the BN feeds (folded
// into each), or "after:<layer>" for a standalone BN following that layer.
struct RealLinearEntry {
  std::string layer;
  std::string role;
  std::string weight;
  std::string bias;
};

struct RealBnEntry {
  std::string name;
  std::vector<std::string> targets;
  std::string after;  // non-empty for a standalone BN
  std::string gamma;
  std::string beta;
  std::string mean;
  std::string var;
  double eps = 1e-5;
};

struct RealManifest {
  std::size_t head_dim = 32;
  std::vector<RealLinearEntry> linears;
  std::vector<RealBnEntry> bns;
  std::filesystem::path base_dir;

  std::string to_text() const;
};

RealManifest parse_real_manifest(std::string_view text, const std::filesystem::path& base_dir = {});
RealManifest load_real_manifest(const std::filesystem::path& path);

fusion::LinearParams load_linear(const RealManifest& manifest, const RealLinearEntry& entry);
fusion::BNParams load_bn(const RealManifest& manifest, const RealBnEntry& entry);

}  // namespace swinfx::io
