// SPDX-FileCopyrightText: © 2026 swinfx contributors
//
// SPDX-License-Identifier: Apache-2.0

#include "swinfx/io.hpp"

#include <array>
#include <bit>
#include <cstdio>
#include <fstream>
#include <iterator>
#include <sstream>

#include "swinfx/error.hpp"

namespace swinfx::io {

namespace fs = std::filesystem;

namespace {

constexpr std::array<std::string_view, 11> kRoles = {"W_Q", "W_K",  "W_V",   "proj",   "fc1", "fc2",
                                                     "merge", "embed", "fc1_bn", "fc2_bn", "rpb"};
constexpr std::array<std::string_view, 9> kBlockRoles = {"W_Q", "W_K",    "W_V",    "proj", "fc1",
                                                         "fc2", "fc1_bn", "fc2_bn", "rpb"};

template <class U>
void put_le(std::string& out, U v) {
  for (std::size_t i = 0; i < sizeof(U); ++i) out.push_back(static_cast<char>((v >> (8 * i)) & 0xff));
}

template <class U>
U get_le(const char* p) {
  U v = 0;
  for (std::size_t i = 0; i < sizeof(U); ++i) v |= static_cast<U>(static_cast<unsigned char>(p[i])) << (8 * i);
  return v;
}

std::string header(std::string_view kind, std::size_t rows, std::size_t cols) {
  return std::string(kind) + " " + std::to_string(rows) + " " + std::to_string(cols) + "\n";
}

// Parses the header, checks the payload length, returns the payload.
std::string_view split_header(std::string_view bytes, std::string_view kind, std::size_t elem, std::size_t& rows,
                              std::size_t& cols) {
  const auto nl = bytes.find('\n');
  if (nl == std::string_view::npos) throw ConfigError("blob: missing header line");
  std::istringstream hdr{std::string(bytes.substr(0, nl))};
  std::string got;
  long long r = -1;
  long long c = -1;
  std::string extra;
  if (!(hdr >> got >> r >> c) || (hdr >> extra) || r < 0 || c < 0) {
    throw ConfigError("blob: malformed header '" + std::string(bytes.substr(0, nl)) + "'");
  }
  if (got != kind) throw ConfigError("blob: expected '" + std::string(kind) + "' header, found '" + got + "'");
  rows = static_cast<std::size_t>(r);
  cols = static_cast<std::size_t>(c);
  std::string_view payload = bytes.substr(nl + 1);
  if (payload.size() != rows * cols * elem) {
    throw ConfigError("blob: payload is " + std::to_string(payload.size()) + " bytes, header implies " +
                      std::to_string(rows * cols * elem));
  }
  return payload;
}

std::vector<std::string> split_ws(std::string_view line) {
  std::istringstream in{std::string(line)};
  std::vector<std::string> out;
  for (std::string tok; in >> tok;) out.push_back(tok);
  return out;
}

std::string_view strip_comment(std::string_view line) {
  const auto hash = line.find('#');
  return hash == std::string_view::npos ? line : line.substr(0, hash);
}

std::vector<std::string_view> lines_of(std::string_view text) {
  std::vector<std::string_view> out;
  std::size_t start = 0;
  while (start <= text.size()) {
    const auto nl = text.find('\n', start);
    const auto end = nl == std::string_view::npos ? text.size() : nl;
    out.push_back(text.substr(start, end - start));
    if (nl == std::string_view::npos) break;
    start = nl + 1;
  }
  return out;
}

fs::path resolve(const fs::path& base, const std::string& p) {
  const fs::path path(p);
  return path.is_absolute() || base.empty() ? path : base / path;
}

std::vector<Fx16> flat(const MatFx& m, std::string_view what) {
  if (m.rows() != 1 && m.cols() != 1) throw ConfigError(std::string(what) + ": expected a vector blob");
  return m.data();
}

fusion::FusedLinear load_fused(const FusedManifest& man, const FusedEntry& e, std::size_t rows, std::size_t cols) {
  fusion::FusedLinear lin;
  lin.w = read_blob_fx(resolve(man.base_dir, e.weight));
  if (lin.w.rows() != rows || lin.w.cols() != cols) {
    throw ConfigError(e.layer + ": weight is " + std::to_string(lin.w.rows()) + "x" + std::to_string(lin.w.cols()) +
                      ", expected " + std::to_string(rows) + "x" + std::to_string(cols));
  }
  if (e.bias == "-") {
    lin.b.assign(cols, Fx16::zero());
  } else {
    lin.b = flat(read_blob_fx(resolve(man.base_dir, e.bias)), e.layer);
    if (lin.b.size() != cols) throw ConfigError(e.layer + ": bias length mismatch");
  }
  return lin;
}

fusion::AffineFx load_affine(const FusedManifest& man, const FusedEntry& e, std::size_t c) {
  if (e.bias == "-") throw ConfigError(e.layer + ": standalone BN needs a shift blob");
  fusion::AffineFx a;
  a.scale = flat(read_blob_fx(resolve(man.base_dir, e.weight)), e.layer);
  a.shift = flat(read_blob_fx(resolve(man.base_dir, e.bias)), e.layer);
  if (a.scale.size() != c || a.shift.size() != c) throw ConfigError(e.layer + ": BN length mismatch");
  return a;
}

MatFx row_matrix(const std::vector<Fx16>& v) { return MatFx(1, v.size(), v); }

}  // namespace

std::string read_text(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open '" + path.string() + "' for reading");
  std::string s((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
  if (in.bad()) throw IoError("read failed on '" + path.string() + "'");
  return s;
}

void write_text(const fs::path& path, std::string_view text) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw IoError("cannot open '" + path.string() + "' for writing");
  out.write(text.data(), static_cast<std::streamsize>(text.size()));
  if (!out) throw IoError("write failed on '" + path.string() + "'");
}

std::string encode_blob(const MatFx& m) {
  std::string out = header("fx16", m.rows(), m.cols());
  for (Fx16 v : m.data()) put_le(out, static_cast<std::uint16_t>(v.raw()));
  return out;
}

std::string encode_blob(const MatReal& m) {
  std::string out = header("f64", m.rows(), m.cols());
  for (double v : m.data()) put_le(out, std::bit_cast<std::uint64_t>(v));
  return out;
}

MatFx decode_blob_fx(std::string_view bytes) {
  std::size_t rows = 0;
  std::size_t cols = 0;
  const std::string_view p = split_header(bytes, "fx16", 2, rows, cols);
  MatFx m(rows, cols);
  for (std::size_t i = 0; i < m.size(); ++i) {
    m.data()[i] = Fx16::from_raw(static_cast<std::int16_t>(get_le<std::uint16_t>(p.data() + 2 * i)));
  }
  return m;
}

MatReal decode_blob_f64(std::string_view bytes) {
  std::size_t rows = 0;
  std::size_t cols = 0;
  const std::string_view p = split_header(bytes, "f64", 8, rows, cols);
  MatReal m(rows, cols);
  for (std::size_t i = 0; i < m.size(); ++i) m.data()[i] = std::bit_cast<double>(get_le<std::uint64_t>(p.data() + 8 * i));
  return m;
}

void write_blob(const fs::path& path, const MatFx& m) { write_text(path, encode_blob(m)); }
void write_blob(const fs::path& path, const MatReal& m) { write_text(path, encode_blob(m)); }

MatFx read_blob_fx(const fs::path& path) {
  try {
    return decode_blob_fx(read_text(path));
  } catch (const ConfigError& e) {
    throw ConfigError(path.string() + ": " + e.what());
  }
}

MatReal read_blob_f64(const fs::path& path) {
  try {
    return decode_blob_f64(read_text(path));
  } catch (const ConfigError& e) {
    throw ConfigError(path.string() + ": " + e.what());
  }
}

std::vector<double> read_vector_f64(const fs::path& path) {
  MatReal m = read_blob_f64(path);
  if (m.rows() != 1 && m.cols() != 1) throw ConfigError(path.string() + ": expected a vector blob");
  return m.data();
}

std::uint64_t fnv1a(std::string_view bytes) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char c : bytes) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  return h;
}

std::string hex64(std::uint64_t v) {
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(v));
  return buf;
}

std::string csv_preamble(std::string_view config_text) {
  return "# swinfx " + std::string(kToolVersion) + " config " + hex64(fnv1a(config_text)) + "\n";
}

std::map<std::string, std::string> parse_key_values(std::string_view text) {
  std::map<std::string, std::string> kv;
  int lineno = 0;
  for (std::string_view raw : lines_of(text)) {
    ++lineno;
    const std::vector<std::string> probe = split_ws(strip_comment(raw));
    if (probe.empty()) continue;
    const std::string line(strip_comment(raw));
    const auto eq = line.find('=');
    if (eq == std::string::npos) throw ConfigError("config line " + std::to_string(lineno) + ": expected key = value");
    const std::vector<std::string> key = split_ws(line.substr(0, eq));
    const std::vector<std::string> value = split_ws(line.substr(eq + 1));
    if (key.size() != 1 || value.size() != 1) {
      throw ConfigError("config line " + std::to_string(lineno) + ": expected one key and one value");
    }
    if (!kv.emplace(key[0], value[0]).second) throw ConfigError("config: duplicate key '" + key[0] + "'");
  }
  return kv;
}

bool is_known_role(std::string_view role) {
  for (std::string_view r : kRoles)
    if (r == role) return true;
  return false;
}

bool is_block_role(std::string_view role) {
  for (std::string_view r : kBlockRoles)
    if (r == role) return true;
  return false;
}

const FusedEntry* FusedManifest::find(std::string_view prefix, std::string_view role) const {
  for (const FusedEntry& e : entries) {
    const auto dot = e.layer.find('.');
    if (e.role == role && std::string_view(e.layer).substr(0, dot) == prefix) return &e;
  }
  return nullptr;
}

std::string FusedManifest::to_text() const {
  std::ostringstream out;
  out << "option rel_pos_bias " << (rel_pos_bias ? "on" : "off") << '\n';
  for (const FusedEntry& e : entries) out << e.layer << ' ' << e.weight << ' ' << e.bias << ' ' << e.role << '\n';
  return out.str();
}

FusedManifest parse_fused_manifest(std::string_view text, const fs::path& base_dir) {
  FusedManifest man;
  man.base_dir = base_dir;
  int lineno = 0;
  for (std::string_view raw : lines_of(text)) {
    ++lineno;
    const std::vector<std::string> tok = split_ws(strip_comment(raw));
    if (tok.empty()) continue;
    const std::string where = "manifest line " + std::to_string(lineno);
    if (tok[0] == "option") {
      if (tok.size() != 3 || tok[1] != "rel_pos_bias" || (tok[2] != "on" && tok[2] != "off")) {
        throw ConfigError(where + ": expected 'option rel_pos_bias on|off'");
      }
      man.rel_pos_bias = tok[2] == "on";
      continue;
    }
    if (tok.size() != 4) throw ConfigError(where + ": expected '<layer> <weight> <bias> <role>'");
    if (!is_known_role(tok[3])) throw ConfigError(where + ": unknown role '" + tok[3] + "'");
    for (const FusedEntry& e : man.entries)
      if (e.layer == tok[0]) throw ConfigError(where + ": duplicate layer '" + tok[0] + "'");
    man.entries.push_back({tok[0], tok[1], tok[2], tok[3]});
  }
  return man;
}

FusedManifest load_fused_manifest(const fs::path& path) {
  return parse_fused_manifest(read_text(path), path.parent_path());
}

void save_block_params(const fs::path& dir, const std::string& prefix, const model::BlockParams& params,
                       FusedManifest& manifest) {
  auto put = [&](const std::string& role, const MatFx& w, const MatFx* b) {
    const std::string stem = prefix + "." + role;
    write_blob(dir / (stem + ".w.fx16"), w);
    std::string bias = "-";
    if (b != nullptr) {
      bias = stem + ".b.fx16";
      write_blob(dir / bias, *b);
    }
    manifest.entries.push_back({stem, stem + ".w.fx16", bias, role});
  };
  auto put_linear = [&](const std::string& role, const fusion::FusedLinear& lin) {
    const MatFx b = row_matrix(lin.b);
    put(role, lin.w, lin.b.empty() ? nullptr : &b);
  };
  auto put_affine = [&](const std::string& role, const fusion::AffineFx& a) {
    const MatFx shift = row_matrix(a.shift);
    put(role, row_matrix(a.scale), &shift);
  };
  put_linear("W_Q", params.attn.q);
  put_linear("W_K", params.attn.k);
  put_linear("W_V", params.attn.v);
  put_linear("proj", params.attn.proj);
  put_linear("fc1", params.ffn.fc1);
  put_linear("fc2", params.ffn.fc2);
  if (params.ffn.bn1) put_affine("fc1_bn", *params.ffn.bn1);
  if (params.ffn.bn2) put_affine("fc2_bn", *params.ffn.bn2);
  if (!params.attn.rel_pos_bias.empty()) {
    const std::size_t n = params.attn.rel_pos_bias.front().rows();
    MatFx stacked(n * params.attn.rel_pos_bias.size(), n);
    for (std::size_t h = 0; h < params.attn.rel_pos_bias.size(); ++h)
      for (std::size_t r = 0; r < n; ++r)
        for (std::size_t c = 0; c < n; ++c) stacked(h * n + r, c) = params.attn.rel_pos_bias[h](r, c);
    put("rpb", stacked, nullptr);
    manifest.rel_pos_bias = true;
  }
}

model::BlockParams load_block_params(const FusedManifest& man, const std::string& prefix,
                                     const model::BlockConfig& cfg) {
  auto need = [&](std::string_view role) -> const FusedEntry& {
    const FusedEntry* e = man.find(prefix, role);
    if (e == nullptr) throw ConfigError("manifest: " + prefix + " has no '" + std::string(role) + "' layer");
    return *e;
  };
  const std::size_t c = cfg.channels;
  const std::size_t hid = cfg.hidden();
  model::BlockParams p;
  p.attn.q = load_fused(man, need("W_Q"), c, c);
  p.attn.k = load_fused(man, need("W_K"), c, c);
  p.attn.v = load_fused(man, need("W_V"), c, c);
  p.attn.proj = load_fused(man, need("proj"), c, c);
  p.ffn.fc1 = load_fused(man, need("fc1"), c, hid);
  p.ffn.fc2 = load_fused(man, need("fc2"), hid, c);
  if (const FusedEntry* e = man.find(prefix, "fc1_bn")) p.ffn.bn1 = load_affine(man, *e, hid);
  if (const FusedEntry* e = man.find(prefix, "fc2_bn")) p.ffn.bn2 = load_affine(man, *e, c);
  if (cfg.rel_pos_bias) {
    const std::size_t n = cfg.tokens();
    const MatFx stacked = load_fused(man, need("rpb"), cfg.heads * n, n).w;
    for (std::size_t h = 0; h < cfg.heads; ++h) {
      MatFx b(n, n);
      for (std::size_t r = 0; r < n; ++r)
        for (std::size_t col = 0; col < n; ++col) b(r, col) = stacked(h * n + r, col);
      p.attn.rel_pos_bias.push_back(std::move(b));
    }
  }
  try {
    model::check_params(p, cfg);
  } catch (const DomainError& e) {
    throw ConfigError(prefix + ": " + e.what());
  }
  return p;
}

std::string RealManifest::to_text() const {
  std::ostringstream out;
  out << "head_dim " << head_dim << '\n';
  for (const RealLinearEntry& e : linears)
    out << "linear " << e.layer << ' ' << e.role << ' ' << e.weight << ' ' << e.bias << '\n';
  for (const RealBnEntry& e : bns) {
    out << "bn " << e.name << ' ';
    if (!e.after.empty()) {
      out << "after:" << e.after;
    } else {
      for (std::size_t i = 0; i < e.targets.size(); ++i) out << (i ? "," : "") << e.targets[i];
    }
    char eps[32];
    std::snprintf(eps, sizeof eps, "%.17g", e.eps);
    out << ' ' << e.gamma << ' ' << e.beta << ' ' << e.mean << ' ' << e.var << ' ' << eps << '\n';
  }
  return out.str();
}

RealManifest parse_real_manifest(std::string_view text, const fs::path& base_dir) {
  RealManifest man;
  man.base_dir = base_dir;
  int lineno = 0;
  for (std::string_view raw : lines_of(text)) {
    ++lineno;
    const std::vector<std::string> tok = split_ws(strip_comment(raw));
    if (tok.empty()) continue;
    const std::string where = "manifest line " + std::to_string(lineno);
    if (tok[0] == "head_dim") {
      if (tok.size() != 2) throw ConfigError(where + ": expected 'head_dim <n>'");
      try {
        const long v = std::stol(tok[1]);
        if (v <= 0) throw ConfigError(where + ": head_dim must be positive");
        man.head_dim = static_cast<std::size_t>(v);
      } catch (const std::logic_error&) {
        throw ConfigError(where + ": bad head_dim '" + tok[1] + "'");
      }
    } else if (tok[0] == "linear") {
      if (tok.size() != 5) throw ConfigError(where + ": expected 'linear <layer> <role> <weight> <bias>'");
      if (!is_known_role(tok[2]) || tok[2] == "fc1_bn" || tok[2] == "fc2_bn" || tok[2] == "rpb") {
        throw ConfigError(where + ": '" + tok[2] + "' is not a linear role");
      }
      for (const RealLinearEntry& e : man.linears)
        if (e.layer == tok[1]) throw ConfigError(where + ": duplicate layer '" + tok[1] + "'");
      man.linears.push_back({tok[1], tok[2], tok[3], tok[4]});
    } else if (tok[0] == "bn") {
      if (tok.size() != 8) throw ConfigError(where + ": expected 'bn <name> <target> <gamma> <beta> <mean> <var> <eps>'");
      RealBnEntry e;
      e.name = tok[1];
      if (tok[2].rfind("after:", 0) == 0) {
        e.after = tok[2].substr(6);
        if (e.after.empty()) throw ConfigError(where + ": empty 'after:' target");
      } else {
        std::stringstream list(tok[2]);
        for (std::string t; std::getline(list, t, ',');)
          if (!t.empty()) e.targets.push_back(t);
        if (e.targets.empty()) throw ConfigError(where + ": BN has no target");
      }
      e.gamma = tok[3];
      e.beta = tok[4];
      e.mean = tok[5];
      e.var = tok[6];
      try {
        std::size_t used = 0;
        e.eps = std::stod(tok[7], &used);
        if (used != tok[7].size()) throw std::invalid_argument("trailing");
      } catch (const std::logic_error&) {
        throw ConfigError(where + ": bad eps '" + tok[7] + "'");
      }
      man.bns.push_back(std::move(e));
    } else {
      throw ConfigError(where + ": unknown directive '" + tok[0] + "'");
    }
  }
  return man;
}

RealManifest load_real_manifest(const fs::path& path) {
  return parse_real_manifest(read_text(path), path.parent_path());
}

fusion::LinearParams load_linear(const RealManifest& man, const RealLinearEntry& e) {
  fusion::LinearParams lin;
  lin.w = read_blob_f64(resolve(man.base_dir, e.weight));
  lin.b = e.bias == "-" ? std::vector<double>(lin.w.cols(), 0.0) : read_vector_f64(resolve(man.base_dir, e.bias));
  try {
    lin.validate();
  } catch (const DomainError& err) {
    throw ConfigError(e.layer + ": " + err.what());
  }
  return lin;
}

fusion::BNParams load_bn(const RealManifest& man, const RealBnEntry& e) {
  fusion::BNParams bn;
  bn.gamma = read_vector_f64(resolve(man.base_dir, e.gamma));
  bn.beta = read_vector_f64(resolve(man.base_dir, e.beta));
  bn.mean = read_vector_f64(resolve(man.base_dir, e.mean));
  bn.var = read_vector_f64(resolve(man.base_dir, e.var));
  bn.eps = e.eps;
  try {
    bn.validate();
  } catch (const DomainError& err) {
    throw ConfigError(e.name + ": " + err.what());
  }
  return bn;
}

}  // namespace swinfx::io
