// SPDX-FileCopyrightText: © 2026 swinfx contributors
//
// SPDX-License-Identifier: Apache-2.0

#include <iostream>
#include <string>

#include "CLI11.hpp"
#include "swinfx/cli.hpp"

namespace {

void add_common(CLI::App* sub, swinfx::cli::RunConfig& cfg) {
  sub->add_option("--out", cfg.out, "Output directory")->capture_default_str();
  sub->add_option("--seed", cfg.seed, "Random seed")->capture_default_str();
}

void add_tile(CLI::App* sub, swinfx::cli::RunConfig& cfg) {
  sub->add_option("--ci", cfg.ci, "Override the inner tile width");
  sub->add_option("--co", cfg.co, "Override the output tile width");
}

}  // namespace

int main(int argc, char** argv) {
  using swinfx::cli::RunConfig;
  RunConfig cfg;
  CLI::App app{"Fixed-point Swin Transformer accelerator model"};
  app.require_subcommand(1);
  app.set_version_flag("--version", std::string("swinfx 0.1.0"));

  CLI::App* kernels = app.add_subcommand("kernels", "Sweep exp2, GELU and softmax against double-precision oracles");
  add_common(kernels, cfg);
  kernels->add_option("--gelu-lo", cfg.gelu_lo, "GELU sweep start")->capture_default_str();
  kernels->add_option("--gelu-hi", cfg.gelu_hi, "GELU sweep end")->capture_default_str();
  kernels->add_option("--softmax-rows", cfg.softmax_rows, "Random softmax rows")->capture_default_str();
  kernels->add_option("--softmax-len", cfg.softmax_len, "Softmax row length")->capture_default_str();
  kernels->add_option("--softmax-lo", cfg.softmax_lo, "Softmax input lower bound")->capture_default_str();
  kernels->add_option("--softmax-hi", cfg.softmax_hi, "Softmax input upper bound")->capture_default_str();

  CLI::App* block = app.add_subcommand("block", "Run toy Swin blocks in fixed point and double precision");
  add_common(block, cfg);
  add_tile(block, cfg);
  block->add_flag("--random", cfg.random, "Synthesize seeded parameters");
  block->add_option("--manifest", cfg.manifest, "Fused parameter manifest");
  block->add_option("--config", cfg.config, "Run config (key = value)");
  block->add_option("--blocks", cfg.blocks, "Number of blocks");

  CLI::App* cost = app.add_subcommand("cost", "Operation counts, invalid ratio and hardware budget");
  add_common(cost, cfg);
  add_tile(cost, cfg);
  cost->add_option("--preset", cfg.preset, "swin-t, swin-s, swin-b or toy")->capture_default_str();

  CLI::App* fuse = app.add_subcommand("fuse", "Fold BN and 1/sqrt(d) into a real manifest and quantize it");
  add_common(fuse, cfg);
  fuse->add_option("--manifest", cfg.manifest, "Real-valued parameter manifest")->required();

  CLI::App* synth = app.add_subcommand("synth", "Write a seeded real-valued parameter manifest");
  add_common(synth, cfg);
  synth->add_option("--config", cfg.config, "Run config (key = value)");
  synth->add_option("--blocks", cfg.blocks, "Number of blocks");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForVersion& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return swinfx::cli::kConfigError;
  }
  cfg.command = app.get_subcommands().front()->get_name();
  return swinfx::cli::dispatch(cfg, std::cout, std::cerr);
}
