// SPDX-FileCopyrightText: © 2026 swinfx contributors
//
// SPDX-License-Identifier: Apache-2.0

#include "swinfx/approx.hpp"

#include <bit>
#include <numbers>
#include <cmath>
#include <fstream>
#include <functional>
#include <queue>
#include <sstream>
#include <vector>

#include "swinfx/error.hpp"

namespace swinfx::approx {

namespace {

constexpr unsigned kFracMask = (1u << Fx16::kFracBits) - 1;
constexpr unsigned kSegmentLen = 1u << SegmentTable::kSegmentShift;

Fx16 eval_line(Fx16 k, Fx16 b, unsigned frac) {
  return add_sat(mul(k, Fx16::from_raw(static_cast<std::int16_t>(frac))), b);
}

// Max relative error of one candidate line over its segment, or +inf when the
// line leaves [1, 2) or steps below the end of the previous segment.
double segment_error(int s, Fx16 k, Fx16 b, std::int16_t prev_end_raw) {
  double worst = 0.0;
  for (unsigned i = 0; i < kSegmentLen; ++i) {
    const unsigned frac = s * kSegmentLen + i;
    const Fx16 y = eval_line(k, b, frac);
    if (y.raw() < Fx16::kOneRaw || y.raw() >= 2 * Fx16::kOneRaw) return INFINITY;
    if (i == 0 && y.raw() < prev_end_raw) return INFINITY;
    const double exact = std::exp2(static_cast<double>(frac) / Fx16::kOneRaw);
    worst = std::max(worst, std::abs(y.to_real() - exact) / exact);
  }
  return worst;
}

}  // namespace

SegmentTable::SegmentTable(const std::array<Fx16, kSegments>& slopes,
                           const std::array<Fx16, kSegments>& intercepts)
    : slopes_(slopes), intercepts_(intercepts) {
  std::int16_t prev = 0;
  for (unsigned frac = 0; frac <= kFracMask; ++frac) {
    const Fx16 y = eval(frac);
    if (y.raw() < Fx16::kOneRaw || y.raw() >= 2 * Fx16::kOneRaw) {
      throw DomainError("SegmentTable: evaluation at frac " + std::to_string(frac) + " leaves [1, 2)");
    }
    if (y.raw() < prev) {
      throw DomainError("SegmentTable: not monotone at frac " + std::to_string(frac));
    }
    prev = y.raw();
  }
}

SegmentTable SegmentTable::fit() {
  std::array<Fx16, kSegments> k{};
  std::array<Fx16, kSegments> b{};
  std::int16_t prev_end = 0;
  for (int s = 0; s < kSegments; ++s) {
    const double lo = static_cast<double>(s) / kSegments;
    const double hi = static_cast<double>(s + 1) / kSegments;
    // Minimax line for a convex function: chord slope, intercept lowered by
    // half the chord-to-curve gap at the tangent point.
    const double slope = (std::exp2(hi) - std::exp2(lo)) / (hi - lo);
    const double tangent = std::log2(slope / std::numbers::ln2);
    double intercept = std::exp2(lo) - slope * lo;
    intercept -= (slope * tangent + intercept - std::exp2(tangent)) / 2.0;

    const int k0 = Fx16::from_real(slope).raw();
    const int b0 = Fx16::from_real(intercept).raw();
    double best = INFINITY;
    for (int kk = k0 - 4; kk <= k0 + 4; ++kk) {
      for (int bb = b0 - 4; bb <= b0 + 4; ++bb) {
        if (s == 0 && bb != Fx16::kOneRaw) continue;
        const Fx16 kc = Fx16::from_raw(static_cast<std::int16_t>(kk));
        const Fx16 bc = Fx16::from_raw(static_cast<std::int16_t>(bb));
        const double err = segment_error(s, kc, bc, prev_end);
        if (err < best) {
          best = err;
          k[s] = kc;
          b[s] = bc;
        }
      }
    }
    if (!std::isfinite(best)) throw DomainError("SegmentTable::fit: no admissible line for segment " + std::to_string(s));
    prev_end = eval_line(k[s], b[s], (s + 1) * kSegmentLen - 1).raw();
  }
  return SegmentTable(k, b);
}

const SegmentTable& SegmentTable::standard() {
  static const SegmentTable table = fit();
  return table;
}

Fx16 SegmentTable::eval(unsigned frac) const {
  frac &= kFracMask;
  const unsigned seg = frac >> kSegmentShift;
  return eval_line(slopes_[seg], intercepts_[seg], frac);
}

std::string SegmentTable::to_text() const {
  std::ostringstream out;
  for (int s = 0; s < kSegments; ++s) out << slopes_[s].raw() << ' ' << intercepts_[s].raw() << '\n';
  return out.str();
}

SegmentTable SegmentTable::from_text(std::string_view text) {
  std::istringstream in{std::string(text)};
  std::array<Fx16, kSegments> k{};
  std::array<Fx16, kSegments> b{};
  for (int s = 0; s < kSegments; ++s) {
    long kr = 0;
    long br = 0;
    if (!(in >> kr >> br)) throw ConfigError("SegmentTable: expected 8 lines of \"k_raw b_raw\"");
    if (kr < Fx16::kRawMin || kr > Fx16::kRawMax || br < Fx16::kRawMin || br > Fx16::kRawMax) {
      throw ConfigError("SegmentTable: raw value out of 16-bit range on line " + std::to_string(s + 1));
    }
    k[s] = Fx16::from_raw(static_cast<std::int16_t>(kr));
    b[s] = Fx16::from_raw(static_cast<std::int16_t>(br));
  }
  std::string extra;
  if (in >> extra) throw ConfigError("SegmentTable: trailing data after 8 entries");
  return SegmentTable(k, b);
}

void SegmentTable::save(const std::filesystem::path& path) const {
  std::ofstream out(path);
  if (!out) throw IoError("cannot write " + path.string());
  out << to_text();
  if (!out) throw IoError("write failed: " + path.string());
}

SegmentTable SegmentTable::load(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot read " + path.string());
  std::ostringstream buf;
  buf << in.rdbuf();
  return from_text(buf.str());
}

Fx16 mul_log2e(Fx16 x) { return sub_sat(add_sat(x, shift(x, -1)), shift(x, -4)); }

Fx16 exp2_frac(unsigned frac, const SegmentTable& table) {
  if (frac > kFracMask) throw DomainError("exp2_frac: fraction must be < 1024");
  return table.eval(frac);
}

Fx16 exp2(Fx16 x, const SegmentTable& table) {
  const int ip = x.int_part();
  if (ip > kExp2MaxInt) return Fx16::max();
  if (ip < kExp2MinInt) return Fx16::zero();
  return shift(table.eval(x.frac_bits()), ip);
}

Fx16 LodResult::mantissa_fx() const {
  return Fx16::saturate(round_shift(m_q15, kMantissaBits - Fx16::kFracBits));
}

std::int64_t LodResult::log2_approx_q15() const {
  return (std::int64_t{m_q15} - (1 << kMantissaBits)) + (std::int64_t{w} << kMantissaBits);
}

LodResult lod_wide(std::int64_t raw_q10) {
  if (raw_q10 <= 0) throw DomainError("lod: input must be positive");
  const auto u = static_cast<std::uint64_t>(raw_q10);
  const int lead = std::bit_width(u) - 1;
  LodResult r;
  r.w = lead - Fx16::kFracBits;
  const int to_mantissa = LodResult::kMantissaBits - lead;
  r.m_q15 = static_cast<std::uint16_t>(to_mantissa >= 0 ? u << to_mantissa : u >> -to_mantissa);
  return r;
}

LodResult lod(Fx16 f) { return lod_wide(f.raw()); }

Fx16 div_exponent_wide(Fx16 f1, std::int64_t f2_raw_q10, bool add_one_to_denominator) {
  if (f1.raw() <= 0) throw DomainError("div_exponent: numerator must be positive");
  const std::int64_t den = add_one_to_denominator ? f2_raw_q10 + Fx16::kOneRaw : f2_raw_q10;
  if (den <= 0) throw DomainError("div_exponent: denominator must be positive");
  const std::int64_t diff = lod(f1).log2_approx_q15() - lod_wide(den).log2_approx_q15();
  return Fx16::saturate(round_shift(diff, LodResult::kMantissaBits - Fx16::kFracBits));
}

Fx16 div_exponent(Fx16 f1, Fx16 f2, bool add_one_to_denominator) {
  const std::int64_t den = add_one_to_denominator ? add_sat(f2, Fx16::one()).raw() : f2.raw();
  return div_exponent_wide(f1, den, false);
}

namespace {

struct Partial {
  Fx16 value;
  std::size_t index;
  int ready;  // cycle at which this partial maximum is available
};

Partial pick(const Partial& a, const Partial& b, int ready) {
  const bool take_b = b.value > a.value || (b.value == a.value && b.index < a.index);
  const Partial& w = take_b ? b : a;
  return {w.value, w.index, ready};
}

struct LaterReady {
  bool operator()(const Partial& a, const Partial& b) const {
    return a.ready != b.ready ? a.ready > b.ready : a.index > b.index;
  }
};

// Descending power-of-two group sizes summing to n.
std::vector<std::size_t> fmu_groups(std::size_t n) {
  std::vector<std::size_t> groups;
  for (int bit = std::bit_width(n) - 1; bit >= 0; --bit) {
    if (n & (std::size_t{1} << bit)) groups.push_back(std::size_t{1} << bit);
  }
  return groups;
}

Partial reduce_group(std::span<const Fx16> v, std::size_t first, std::size_t size) {
  std::vector<Partial> level;
  level.reserve(size);
  for (std::size_t i = 0; i < size; ++i) level.push_back({v[first + i], first + i, 0});
  int cycle = 0;
  while (level.size() > 1) {
    ++cycle;
    std::vector<Partial> next;
    next.reserve(level.size() / 2);
    for (std::size_t i = 0; i + 1 < level.size(); i += 2) next.push_back(pick(level[i], level[i + 1], cycle));
    level = std::move(next);
  }
  return level.front();
}

Partial merge_groups(std::vector<Partial> parts) {
  std::priority_queue<Partial, std::vector<Partial>, LaterReady> queue(LaterReady{}, std::move(parts));
  while (queue.size() > 1) {
    const Partial a = queue.top();
    queue.pop();
    const Partial b = queue.top();
    queue.pop();
    queue.push(pick(a, b, std::max(a.ready, b.ready) + 1));
  }
  return queue.top();
}

}  // namespace

MaxResult find_max(std::span<const Fx16> v) {
  if (v.empty()) throw DomainError("find_max: empty input");
  std::vector<Partial> parts;
  std::size_t first = 0;
  for (std::size_t size : fmu_groups(v.size())) {
    parts.push_back(reduce_group(v, first, size));
    first += size;
  }
  const Partial best = merge_groups(std::move(parts));
  return {best.value, best.index, best.ready};
}

int fmu_cycles(std::size_t n) {
  if (n == 0) throw DomainError("fmu_cycles: n must be positive");
  std::vector<Partial> parts;
  for (std::size_t size : fmu_groups(n)) {
    parts.push_back({Fx16::zero(), parts.size(), static_cast<int>(std::bit_width(size)) - 1});
  }
  return merge_groups(std::move(parts)).ready;
}

}  // namespace swinfx::approx
