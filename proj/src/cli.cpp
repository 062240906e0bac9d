// SPDX-FileCopyrightText: © 2026 swinfx contributors
//
// SPDX-License-Identifier: Apache-2.0

#include "swinfx/cli.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <map>
#include <ostream>
#include <set>
#include <sstream>

#include "swinfx/approx.hpp"
#include "swinfx/error.hpp"
#include "swinfx/fusion.hpp"
#include "swinfx/io.hpp"
#include "swinfx/nonlinear.hpp"
#include "swinfx/rng.hpp"

namespace swinfx::cli {

namespace fs = std::filesystem;

namespace {

constexpr std::uint64_t kInputStream = 0x9e3779b97f4a7c15ULL;

std::string num(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.9g", v);
  return buf;
}

void ensure_dir(const fs::path& dir) {
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec || !fs::is_directory(dir)) throw IoError("cannot create output directory '" + dir.string() + "'");
}

std::size_t parse_size(const std::string& key, const std::string& v) {
  std::size_t used = 0;
  unsigned long long n = 0;
  try {
    n = std::stoull(v, &used);
  } catch (const std::logic_error&) {
    used = 0;
  }
  if (used == 0 || used != v.size() || v[0] == '-') throw ConfigError("config: '" + key + "' needs a count, got '" + v + "'");
  return static_cast<std::size_t>(n);
}

bool parse_switch(const std::string& key, const std::string& v, std::string_view on, std::string_view off) {
  if (v == on) return true;
  if (v == off) return false;
  throw ConfigError("config: '" + key + "' must be " + std::string(on) + " or " + std::string(off));
}

std::string prefix_of(const std::string& layer) { return layer.substr(0, layer.find('.')); }

MatFx row_fx(const std::vector<Fx16>& v) { return MatFx(1, v.size(), v); }

MatReal row_real(const std::vector<double>& v) { return MatReal(1, v.size(), v); }

}  // namespace

mmu::TileConfig RunConfig::tile() const {
  mmu::TileConfig t;
  if (ci) t.ci = *ci;
  if (co) t.co = *co;
  try {
    t.validate();
  } catch (const DomainError& e) {
    throw ConfigError(e.what());
  }
  return t;
}

std::string RunConfig::to_text() const {
  std::ostringstream out;
  out << "command = " << command << '\n';
  out << "preset = " << preset << '\n';
  out << "seed = " << seed << '\n';
  out << "random = " << (random ? 1 : 0) << '\n';
  out << "manifest = " << manifest.string() << '\n';
  out << "config = " << config.string() << '\n';
  out << "blocks = " << (blocks ? std::to_string(*blocks) : "-") << '\n';
  out << "ci = " << (ci ? std::to_string(*ci) : "-") << '\n';
  out << "co = " << (co ? std::to_string(*co) : "-") << '\n';
  out << "gelu_lo = " << num(gelu_lo) << '\n';
  out << "gelu_hi = " << num(gelu_hi) << '\n';
  out << "softmax_rows = " << softmax_rows << '\n';
  out << "softmax_len = " << softmax_len << '\n';
  out << "softmax_lo = " << num(softmax_lo) << '\n';
  out << "softmax_hi = " << num(softmax_hi) << '\n';
  return out.str();
}

std::string KernelSweep::to_text() const {
  std::ostringstream out;
  out << "exp2.rows: " << exp2_rows << '\n';
  out << "exp2.max_rel_err: " << num(exp2_max_rel) << '\n';
  out << "exp2.max_rel_err_full_domain: " << num(exp2_max_rel_full) << '\n';
  out << "exp2.max_abs_err: " << num(exp2_max_abs) << '\n';
  out << "exp2.mean_rel_err_full_domain: " << num(exp2_mean_rel) << '\n';
  out << "exp2.full_domain_bound: " << (exp2_within_full_bound ? "ok" : "violated") << '\n';
  out << "gelu.rows: " << gelu_rows << '\n';
  out << "gelu.max_abs_err: " << num(gelu_max_abs) << '\n';
  out << "gelu.mean_abs_err: " << num(gelu_mean_abs) << '\n';
  out << "gelu.argmax_x: " << num(gelu_argmax) << '\n';
  out << "gelu.abs_err_at_zero: " << num(gelu_at_zero) << '\n';
  out << "gelu.monotone_nonneg: " << (gelu_monotone_nonneg ? "yes" : "no") << '\n';
  out << "gelu.sign_envelope: " << (gelu_in_envelope ? "ok" : "violated") << '\n';
  out << "softmax.rows: " << softmax_rows << '\n';
  out << "softmax.max_abs_err: " << num(softmax_max_abs) << '\n';
  out << "softmax.mean_abs_err: " << num(softmax_mean_abs) << '\n';
  out << "softmax.sum_min: " << num(softmax_sum_min) << '\n';
  out << "softmax.sum_max: " << num(softmax_sum_max) << '\n';
  out << "softmax.max_sum_dev: " << num(softmax_max_sum_dev) << '\n';
  out << "softmax.rows_sum_outside_0.05: " << softmax_rows_outside << '\n';
  out << "softmax.argmax_preserved: " << (softmax_argmax_preserved ? "yes" : "no") << '\n';
  return out.str();
}

KernelSweep sweep_kernels(const RunConfig& cfg, std::string* exp2_csv, std::string* gelu_csv,
                          std::string* softmax_csv) {
  if (!(cfg.gelu_lo <= cfg.gelu_hi)) throw ConfigError("kernels: gelu range is empty");
  if (cfg.softmax_len == 0 || cfg.softmax_len > nonlinear::kMaxSoftmaxLen) {
    throw ConfigError("kernels: softmax length must be in [1, 64]");
  }
  if (!(cfg.softmax_lo < cfg.softmax_hi)) throw ConfigError("kernels: softmax range is empty");
  KernelSweep s;
  const std::string preamble = io::csv_preamble(cfg.to_text());

  // exp2 over every raw value whose integer part the unit handles.
  std::ostringstream e;
  if (exp2_csv) e << preamble << "input,fixed,oracle,abs_err,rel_err\n";
  double abs_sum = 0.0;
  double rel_sum = 0.0;
  const int lo = approx::kExp2MinInt * Fx16::kOneRaw;
  const int hi = (approx::kExp2MaxInt + 1) * Fx16::kOneRaw - 1;
  for (int raw = lo; raw <= hi; ++raw) {
    const Fx16 x = Fx16::from_raw(static_cast<std::int16_t>(raw));
    const double fixed = approx::exp2(x).to_real();
    const double exact = std::exp2(x.to_real());
    const double abs_err = std::abs(fixed - exact);
    const double rel_err = abs_err / exact;
    ++s.exp2_rows;
    abs_sum += abs_err;
    rel_sum += rel_err;
    s.exp2_max_abs = std::max(s.exp2_max_abs, abs_err);
    s.exp2_max_rel_full = std::max(s.exp2_max_rel_full, rel_err);
    if (x.to_real() >= -4.0) s.exp2_max_rel = std::max(s.exp2_max_rel, rel_err);
    if (rel_err > 0.02 && abs_err > 1.0 / Fx16::kOneRaw) s.exp2_within_full_bound = false;
    if (exp2_csv) e << num(x.to_real()) << ',' << num(fixed) << ',' << num(exact) << ',' << num(abs_err) << ',' << num(rel_err) << '\n';
  }
  s.exp2_mean_rel = rel_sum / static_cast<double>(s.exp2_rows);
  if (exp2_csv) {
    e << "summary_max,,," << num(s.exp2_max_abs) << ',' << num(s.exp2_max_rel_full) << '\n';
    e << "summary_mean,,," << num(abs_sum / static_cast<double>(s.exp2_rows)) << ',' << num(s.exp2_mean_rel) << '\n';
    *exp2_csv = e.str();
  }

  // gelu over every grid point in [gelu_lo, gelu_hi].
  std::ostringstream g;
  if (gelu_csv) g << preamble << "input,fixed,oracle,abs_err\n";
  const Fx16 glo = Fx16::from_real_strict(cfg.gelu_lo);
  const Fx16 ghi = Fx16::from_real_strict(cfg.gelu_hi);
  double gsum = 0.0;
  double excess = 0.0;  // worst step outside [min(0, x), max(0, x)]
  std::optional<Fx16> prev;
  for (int raw = glo.raw(); raw <= ghi.raw(); ++raw) {
    const Fx16 x = Fx16::from_raw(static_cast<std::int16_t>(raw));
    const Fx16 y = nonlinear::gelu(x);
    const double xr = x.to_real();
    const double fixed = y.to_real();
    const double exact = nonlinear::gelu_reference(xr);
    const double err = std::abs(fixed - exact);
    ++s.gelu_rows;
    gsum += err;
    if (err > s.gelu_max_abs) {
      s.gelu_max_abs = err;
      s.gelu_argmax = xr;
    }
    if (raw == 0) s.gelu_at_zero = err;
    if (raw >= 0) {
      if (prev && y < *prev) s.gelu_monotone_nonneg = false;
      prev = y;
    }
    excess = std::max({excess, std::min(xr, 0.0) - fixed, fixed - std::max(xr, 0.0)});
    if (gelu_csv) g << num(xr) << ',' << num(fixed) << ',' << num(exact) << ',' << num(err) << '\n';
  }
  s.gelu_mean_abs = gsum / static_cast<double>(s.gelu_rows);
  s.gelu_in_envelope = excess <= s.gelu_max_abs;
  if (gelu_csv) {
    g << "summary_max,,," << num(s.gelu_max_abs) << '\n';
    g << "summary_mean,,," << num(s.gelu_mean_abs) << '\n';
    *gelu_csv = g.str();
  }

  // softmax on seeded uniform rows.
  std::ostringstream m;
  if (softmax_csv) m << preamble << "row,sum,max_abs_err,argmax_ok\n";
  Rng rng(cfg.seed);
  std::vector<Fx16> values(cfg.softmax_len);
  double ssum = 0.0;
  s.softmax_sum_min = 1.0;
  s.softmax_sum_max = 1.0;
  for (std::size_t r = 0; r < cfg.softmax_rows; ++r) {
    for (Fx16& v : values) {
      const double u = rng.uniform(cfg.softmax_lo, cfg.softmax_hi);
      v = Fx16::from_real(u);
    }
    const std::vector<Fx16> fixed = nonlinear::softmax_row(values);
    const std::vector<double> exact = nonlinear::softmax_reference(to_real(values));
    double sum = 0.0;
    double row_err = 0.0;
    for (std::size_t i = 0; i < fixed.size(); ++i) {
      const double err = std::abs(fixed[i].to_real() - exact[i]);
      sum += fixed[i].to_real();
      row_err = std::max(row_err, err);
      ssum += err;
    }
    const auto in_arg = static_cast<std::size_t>(std::max_element(values.begin(), values.end()) - values.begin());
    const bool arg_ok = fixed[in_arg] == *std::max_element(fixed.begin(), fixed.end());
    ++s.softmax_rows;
    s.softmax_argmax_preserved = s.softmax_argmax_preserved && arg_ok;
    s.softmax_max_abs = std::max(s.softmax_max_abs, row_err);
    s.softmax_sum_min = std::min(s.softmax_sum_min, sum);
    s.softmax_sum_max = std::max(s.softmax_sum_max, sum);
    s.softmax_max_sum_dev = std::max(s.softmax_max_sum_dev, std::abs(sum - 1.0));
    if (std::abs(sum - 1.0) > 0.05) ++s.softmax_rows_outside;
    if (softmax_csv) m << r << ',' << num(sum) << ',' << num(row_err) << ',' << (arg_ok ? 1 : 0) << '\n';
  }
  if (s.softmax_rows > 0) s.softmax_mean_abs = ssum / static_cast<double>(s.softmax_rows * cfg.softmax_len);
  if (softmax_csv) {
    m << "summary_max,," << num(s.softmax_max_abs) << ",\n";
    m << "summary_mean,," << num(s.softmax_mean_abs) << ",\n";
    *softmax_csv = m.str();
  }
  return s;
}

model::BlockConfig BlockRunSpec::block(std::size_t index) const {
  model::BlockConfig b;
  b.window = window;
  b.channels = channels;
  b.heads = heads;
  b.mlp_ratio = mlp_ratio;
  b.shifted = alternate_shift && index % 2 == 1;
  b.rel_pos_bias = rel_pos_bias;
  return b;
}

BlockRunSpec BlockRunSpec::parse(const std::string& text) {
  BlockRunSpec s;
  for (const auto& [key, value] : io::parse_key_values(text)) {
    if (key == "grid") {
      s.grid = parse_size(key, value);
    } else if (key == "window") {
      s.window = parse_size(key, value);
    } else if (key == "channels") {
      s.channels = parse_size(key, value);
    } else if (key == "heads") {
      s.heads = parse_size(key, value);
    } else if (key == "mlp_ratio") {
      s.mlp_ratio = parse_size(key, value);
    } else if (key == "blocks") {
      s.blocks = parse_size(key, value);
    } else if (key == "shift") {
      s.alternate_shift = parse_switch(key, value, "alternate", "none");
    } else if (key == "rel_pos_bias") {
      s.rel_pos_bias = parse_switch(key, value, "on", "off");
    } else {
      throw ConfigError("config: unknown key '" + key + "'");
    }
  }
  if (s.grid == 0 || s.window == 0 || s.grid % s.window != 0) throw ConfigError("config: grid must be a multiple of window");
  if (s.blocks == 0) throw ConfigError("config: blocks must be positive");
  try {
    s.block(0).validate();
  } catch (const DomainError& e) {
    throw ConfigError(std::string("config: ") + e.what());
  }
  return s;
}

std::string BlockRunSpec::to_text() const {
  std::ostringstream out;
  out << "grid = " << grid << '\n';
  out << "window = " << window << '\n';
  out << "channels = " << channels << '\n';
  out << "heads = " << heads << '\n';
  out << "mlp_ratio = " << mlp_ratio << '\n';
  out << "blocks = " << blocks << '\n';
  out << "shift = " << (alternate_shift ? "alternate" : "none") << '\n';
  out << "rel_pos_bias = " << (rel_pos_bias ? "on" : "off") << '\n';
  return out.str();
}

std::string BlockRun::to_text() const {
  std::ostringstream out;
  out << "blocks: " << blocks.size() << '\n';
  out << "grid: " << spec.grid << "x" << spec.grid << '\n';
  out << "channels: " << spec.channels << '\n';
  out << "heads: " << spec.heads << '\n';
  out << "window: " << spec.window << '\n';
  out << "rel_pos_bias: " << (spec.rel_pos_bias ? "on" : "off") << '\n';
  for (const BlockDivergence& b : blocks) {
    const std::string p = "block" + std::to_string(b.index) + ".";
    out << p << "kind: " << (b.shifted ? "SW-MSA" : "W-MSA") << '\n';
    out << p << "shape: " << (b.shape_ok ? "ok" : "mismatch") << '\n';
    out << p << "max_abs_divergence: " << num(b.max_abs) << '\n';
    out << p << "mean_abs_divergence: " << num(b.mean_abs) << '\n';
  }
  out << "identity: " << (identity ? "yes" : "no") << '\n';
  out << "mmu.tiles: " << counters.tiles << '\n';
  out << "mmu.cycles: " << counters.cycles << '\n';
  out << "mmu.issued_macs: " << counters.issued_macs << '\n';
  out << "mmu.useful_macs: " << counters.useful_macs << '\n';
  out << "mmu.invalid_macs: " << counters.invalid_macs() << '\n';
  return out.str();
}

std::string BlockRun::to_csv() const {
  std::ostringstream out;
  out << "block,kind,max_abs_divergence,mean_abs_divergence\n";
  for (const BlockDivergence& b : blocks) {
    out << b.index << ',' << (b.shifted ? "SW-MSA" : "W-MSA") << ',' << num(b.max_abs) << ',' << num(b.mean_abs)
        << '\n';
  }
  return out.str();
}

std::vector<model::BlockParams> random_params(const BlockRunSpec& spec, std::uint64_t seed) {
  Rng rng(seed);
  std::vector<model::BlockParams> params;
  for (std::size_t i = 0; i < spec.blocks; ++i) params.push_back(model::random_block_params(spec.block(i), rng));
  return params;
}

BlockRun run_blocks(const BlockRunSpec& spec, const std::vector<model::BlockParams>& params, std::uint64_t seed,
                    const mmu::TileConfig& tile) {
  BlockRun run;
  run.spec = spec;
  Rng rng(seed ^ kInputStream);
  model::FeatureMap x(spec.grid, spec.grid, spec.channels);
  for (Fx16& v : x.data) {
    const double u = rng.uniform(-1.0, 1.0);
    v = Fx16::from_real(u);
  }
  const model::FeatureMap x0 = x;
  model::FeatureMapReal ref = model::to_real(x);
  for (std::size_t i = 0; i < params.size(); ++i) {
    const model::BlockConfig cfg = spec.block(i);
    x = model::swin_block(x, params[i], cfg, tile, &run.counters);
    ref = model::reference::swin_block(ref, params[i], cfg);
    BlockDivergence d;
    d.index = i;
    d.shifted = cfg.shifted;
    d.shape_ok = x.h == spec.grid && x.w == spec.grid && x.c == spec.channels && ref.h == x.h && ref.w == x.w &&
                 ref.c == x.c;
    double sum = 0.0;
    for (std::size_t k = 0; k < x.data.size(); ++k) {
      const double err = std::abs(x.data[k].to_real() - ref.data[k]);
      d.max_abs = std::max(d.max_abs, err);
      sum += err;
    }
    d.mean_abs = x.data.empty() ? 0.0 : sum / static_cast<double>(x.data.size());
    run.blocks.push_back(d);
  }
  run.identity = x == x0;
  return run;
}

void write_real_manifest(const fs::path& dir, const BlockRunSpec& spec, std::uint64_t seed, bool identity_bn) {
  ensure_dir(dir);
  Rng rng(seed);
  io::RealManifest man;
  man.head_dim = spec.block(0).head_dim();
  auto blob = [&](const std::string& name, const MatReal& m) {
    io::write_blob(dir / (name + ".f64"), m);
    return name + ".f64";
  };
  auto linear = [&](const std::string& layer, const std::string& role, const fusion::LinearParams& lin) {
    const std::string w = blob(layer + ".w", lin.w);
    const std::string b = blob(layer + ".b", row_real(lin.b));
    man.linears.push_back({layer, role, w, b});
  };
  auto bn = [&](const std::string& name, std::vector<std::string> targets, std::string after,
                const fusion::BNParams& p) {
    io::RealBnEntry e;
    e.name = name;
    e.targets = std::move(targets);
    e.after = std::move(after);
    e.gamma = blob(name + ".gamma", row_real(p.gamma));
    e.beta = blob(name + ".beta", row_real(p.beta));
    e.mean = blob(name + ".mean", row_real(p.mean));
    e.var = blob(name + ".var", row_real(p.var));
    e.eps = p.eps;
    man.bns.push_back(std::move(e));
  };
  for (std::size_t i = 0; i < spec.blocks; ++i) {
    const model::BlockConfig cfg = spec.block(i);
    model::RealBlockParams r = model::random_real_block_params(cfg, rng);
    if (identity_bn) {
      r.bn_attn = r.bn_ffn = r.bn2 = fusion::BNParams::identity(cfg.channels);
      r.bn1 = fusion::BNParams::identity(cfg.hidden());
    }
    const std::string p = "block" + std::to_string(i) + ".";
    linear(p + "W_Q", "W_Q", r.wq);
    linear(p + "W_K", "W_K", r.wk);
    linear(p + "W_V", "W_V", r.wv);
    linear(p + "proj", "proj", r.proj);
    linear(p + "fc1", "fc1", r.fc1);
    linear(p + "fc2", "fc2", r.fc2);
    bn(p + "bn_attn", {p + "W_Q", p + "W_K", p + "W_V"}, "", r.bn_attn);
    bn(p + "bn_ffn", {p + "fc1"}, "", r.bn_ffn);
    bn(p + "bn_fc1", {}, p + "fc1", r.bn1);
    bn(p + "bn_fc2", {}, p + "fc2", r.bn2);
  }
  io::write_text(dir / "real.manifest", man.to_text());
}

std::string FuseReport::to_text() const {
  std::ostringstream out;
  out << "layers: " << layers.size() << '\n';
  for (const FuseLayerReport& l : layers) {
    out << l.layer << ".role: " << l.role << '\n';
    if (!l.note.empty()) out << l.layer << ".folded: " << l.note << '\n';
    out << l.layer << ".saturated: " << l.saturated << '\n';
    out << l.layer << ".fused_vs_sequential_rel: " << num(l.fused_vs_sequential_rel) << '\n';
    out << l.layer << ".fixed_vs_sequential_abs: " << num(l.fixed_vs_sequential_abs) << '\n';
  }
  out << "saturated_total: " << saturated_total << '\n';
  out << "max_fused_vs_sequential_rel: " << num(max_fused_vs_sequential_rel) << '\n';
  out << "max_fixed_vs_sequential_abs: " << num(max_fixed_vs_sequential_abs) << '\n';
  return out.str();
}

FuseReport fuse_manifest(const fs::path& in, const fs::path& out, std::uint64_t seed) {
  constexpr std::size_t kSamples = 16;
  const io::RealManifest man = io::load_real_manifest(in);

  std::map<std::string, const io::RealLinearEntry*> by_layer;
  std::map<std::string, std::set<std::string>> block_roles;
  for (const io::RealLinearEntry& e : man.linears) {
    by_layer[e.layer] = &e;
    if (io::is_block_role(e.role)) {
      auto& roles = block_roles[prefix_of(e.layer)];
      if (!roles.insert(e.role).second) throw ConfigError("fuse: " + prefix_of(e.layer) + " has two '" + e.role + "' layers");
    }
  }
  for (const auto& [prefix, roles] : block_roles) {
    for (const char* need : {"W_Q", "W_K", "W_V", "proj", "fc1", "fc2"}) {
      if (!roles.count(need)) throw ConfigError("fuse: " + prefix + " is missing the '" + need + "' layer");
    }
  }
  std::map<std::string, const io::RealBnEntry*> folded;
  std::map<std::string, const io::RealBnEntry*> standalone;
  for (const io::RealBnEntry& bn : man.bns) {
    if (!bn.after.empty()) {
      const auto it = by_layer.find(bn.after);
      if (it == by_layer.end()) throw ConfigError("fuse: BN " + bn.name + " follows unknown layer " + bn.after);
      if (it->second->role != "fc1" && it->second->role != "fc2") {
        throw ConfigError("fuse: standalone BN " + bn.name + " must follow fc1 or fc2");
      }
      if (!standalone.emplace(bn.after, &bn).second) throw ConfigError("fuse: two BNs follow " + bn.after);
      continue;
    }
    for (const std::string& t : bn.targets) {
      if (!by_layer.count(t)) throw ConfigError("fuse: BN " + bn.name + " targets unknown layer " + t);
      if (!folded.emplace(t, &bn).second) throw ConfigError("fuse: two BNs fold into " + t);
    }
  }

  ensure_dir(out);
  Rng rng(seed);
  io::FusedManifest fused_man;
  FuseReport report;
  auto samples = [&](std::size_t width) {
    MatFx x(kSamples, width);
    for (Fx16& v : x.data()) {
      const double u = rng.uniform(-2.0, 2.0);
      v = Fx16::from_real(u);
    }
    return x;
  };
  auto record = [&](FuseLayerReport l) {
    report.saturated_total += l.saturated;
    report.max_fused_vs_sequential_rel = std::max(report.max_fused_vs_sequential_rel, l.fused_vs_sequential_rel);
    report.max_fixed_vs_sequential_abs = std::max(report.max_fixed_vs_sequential_abs, l.fixed_vs_sequential_abs);
    report.layers.push_back(std::move(l));
  };

  for (const io::RealLinearEntry& e : man.linears) {
    const fusion::LinearParams lin = io::load_linear(man, e);
    const auto bn_it = folded.find(e.layer);
    const fusion::BNParams* bn = nullptr;
    fusion::BNParams bn_params;
    if (bn_it != folded.end()) {
      bn_params = io::load_bn(man, *bn_it->second);
      bn = &bn_params;
    }
    std::string note;
    fusion::LinearParams fused = lin;
    try {
      if (bn) {
        fused = fusion::fuse_bn_linear(*bn, lin);
        note = bn_it->second->name;
      }
    } catch (const DomainError& err) {
      throw ConfigError("fuse: " + e.layer + ": " + err.what());
    }
    const bool is_q = e.role == "W_Q";
    if (is_q) {
      fused = fusion::fold_q_scale(fused, man.head_dim);
      note += note.empty() ? "1/sqrt(d)" : "; 1/sqrt(d)";
    }
    const fusion::FusedLinear q = fusion::quantize_linear(fused, note);
    io::write_blob(out / (e.layer + ".w.fx16"), q.w);
    io::write_blob(out / (e.layer + ".b.fx16"), row_fx(q.b));
    fused_man.entries.push_back({e.layer, e.layer + ".w.fx16", e.layer + ".b.fx16", e.role});

    FuseLayerReport l{e.layer, e.role, note, q.saturated};
    const MatFx x = samples(lin.w.rows());
    const MatReal y_fixed = to_real(mmu::linear(x, q.w, q.b, mmu::TileConfig{}));
    const double scale = is_q ? 1.0 / std::sqrt(static_cast<double>(man.head_dim)) : 1.0;
    double worst_fused = 0.0;
    double worst_seq = 0.0;
    for (std::size_t r = 0; r < kSamples; ++r) {
      const std::vector<double> xr = to_real(x.row(r));
      const std::vector<double> seq = fusion::apply_linear(lin, bn ? fusion::apply_bn(*bn, xr) : xr);
      const std::vector<double> one = fusion::apply_linear(fused, xr);
      for (std::size_t j = 0; j < seq.size(); ++j) {
        const double s = seq[j] * scale;
        worst_seq = std::max(worst_seq, std::abs(s));
        worst_fused = std::max(worst_fused, std::abs(one[j] - s));
        l.fixed_vs_sequential_abs = std::max(l.fixed_vs_sequential_abs, std::abs(y_fixed(r, j) - s));
      }
    }
    l.fused_vs_sequential_rel = worst_seq > 0.0 ? worst_fused / worst_seq : worst_fused;
    record(std::move(l));
  }

  for (const io::RealLinearEntry& e : man.linears) {
    const auto it = standalone.find(e.layer);
    if (it == standalone.end()) continue;
    const fusion::BNParams bn = io::load_bn(man, *it->second);
    if (bn.channels() != io::read_blob_f64(man.base_dir / e.weight).cols()) {
      throw ConfigError("fuse: BN " + it->second->name + " width does not match " + e.layer);
    }
    const fusion::AffineFx a = fusion::quantize_bn_affine(bn);
    const std::string layer = e.layer + "_bn";
    const std::string role = e.role + "_bn";
    io::write_blob(out / (layer + ".w.fx16"), row_fx(a.scale));
    io::write_blob(out / (layer + ".b.fx16"), row_fx(a.shift));
    fused_man.entries.push_back({layer, layer + ".w.fx16", layer + ".b.fx16", role});

    FuseLayerReport l{layer, role, it->second->name, a.saturated};
    const MatFx x = samples(bn.channels());
    const MatReal y_fixed = to_real(fusion::apply_affine(x, a));
    for (std::size_t r = 0; r < kSamples; ++r) {
      const std::vector<double> seq = fusion::apply_bn(bn, to_real(x.row(r)));
      for (std::size_t j = 0; j < seq.size(); ++j) {
        l.fixed_vs_sequential_abs = std::max(l.fixed_vs_sequential_abs, std::abs(y_fixed(r, j) - seq[j]));
      }
    }
    record(std::move(l));
  }

  io::write_text(out / "fused.manifest", fused_man.to_text());
  return report;
}

int cmd_kernels(const RunConfig& cfg, std::ostream& log) {
  ensure_dir(cfg.out);
  std::string exp2_csv;
  std::string gelu_csv;
  std::string softmax_csv;
  const KernelSweep s = sweep_kernels(cfg, &exp2_csv, &gelu_csv, &softmax_csv);
  io::write_text(cfg.out / "exp2_sweep.csv", exp2_csv);
  io::write_text(cfg.out / "gelu_sweep.csv", gelu_csv);
  io::write_text(cfg.out / "softmax_sweep.csv", softmax_csv);
  io::write_text(cfg.out / "kernels_summary.txt", s.to_text());
  log << s.to_text();
  return kOk;
}

int cmd_block(const RunConfig& cfg, std::ostream& log) {
  BlockRunSpec spec = cfg.config.empty() ? BlockRunSpec{} : BlockRunSpec::parse(io::read_text(cfg.config));
  if (cfg.blocks) {
    if (*cfg.blocks == 0) throw ConfigError("block: --blocks must be positive");
    spec.blocks = *cfg.blocks;
  }
  std::vector<model::BlockParams> params;
  if (cfg.random == !cfg.manifest.empty()) throw ConfigError("block: give exactly one of --random or --manifest");
  if (cfg.random) {
    params = random_params(spec, cfg.seed);
  } else {
    const io::FusedManifest man = io::load_fused_manifest(cfg.manifest);
    spec.rel_pos_bias = spec.rel_pos_bias || man.rel_pos_bias;
    for (std::size_t i = 0; i < spec.blocks; ++i) {
      params.push_back(io::load_block_params(man, "block" + std::to_string(i), spec.block(i)));
    }
  }
  const BlockRun run = run_blocks(spec, params, cfg.seed, cfg.tile());
  ensure_dir(cfg.out);
  io::write_text(cfg.out / "block_report.txt", run.to_text());
  io::write_text(cfg.out / "block_divergence.csv", io::csv_preamble(cfg.to_text() + spec.to_text()) + run.to_csv());
  log << run.to_text();
  return kOk;
}

int cmd_cost(const RunConfig& cfg, std::ostream& log) {
  cost::ModelShape shape = cost::preset(cfg.preset);
  const mmu::TileConfig tile = cfg.tile();
  if (cfg.co) shape.co = *cfg.co;
  const cost::CostReport report = cost::cost_report(shape, tile);
  ensure_dir(cfg.out);
  io::write_text(cfg.out / ("cost_" + shape.name + ".txt"), report.to_text());
  io::write_text(cfg.out / ("cost_" + shape.name + ".csv"), io::csv_preamble(cfg.to_text()) + report.to_csv());
  log << report.to_text();
  return kOk;
}

int cmd_fuse(const RunConfig& cfg, std::ostream& log) {
  if (cfg.manifest.empty()) throw ConfigError("fuse: --manifest is required");
  const FuseReport report = fuse_manifest(cfg.manifest, cfg.out, cfg.seed);
  io::write_text(cfg.out / "fuse_report.txt", report.to_text());
  log << report.to_text();
  return kOk;
}

int cmd_synth(const RunConfig& cfg, std::ostream& log) {
  BlockRunSpec spec = cfg.config.empty() ? BlockRunSpec{} : BlockRunSpec::parse(io::read_text(cfg.config));
  if (cfg.blocks) spec.blocks = *cfg.blocks;
  write_real_manifest(cfg.out, spec, cfg.seed);
  log << "manifest: " << (cfg.out / "real.manifest").string() << '\n';
  return kOk;
}

int dispatch(const RunConfig& cfg, std::ostream& log, std::ostream& err) {
  try {
    if (cfg.command == "kernels") return cmd_kernels(cfg, log);
    if (cfg.command == "block") return cmd_block(cfg, log);
    if (cfg.command == "cost") return cmd_cost(cfg, log);
    if (cfg.command == "fuse") return cmd_fuse(cfg, log);
    if (cfg.command == "synth") return cmd_synth(cfg, log);
    throw ConfigError("unknown command '" + cfg.command + "'");
  } catch (const ConfigError& e) {
    err << "config error: " << e.what() << '\n';
    return kConfigError;
  } catch (const IoError& e) {
    err << "i/o error: " << e.what() << '\n';
    return kIoError;
  } catch (const fs::filesystem_error& e) {
    err << "i/o error: " << e.what() << '\n';
    return kIoError;
  } catch (const DomainError& e) {
    err << "invariant violation: " << e.what() << '\n';
    return kInvariantError;
  }
}

}  // namespace swinfx::cli
