#include "difflight/architecture.hpp"

#include <algorithm>
#include <charconv>

#include "difflight/error.hpp"

namespace difflight {

namespace {

std::size_t parse_dim(std::string_view text, std::string_view what) {
  while (!text.empty() && text.front() == ' ') text.remove_prefix(1);
  while (!text.empty() && text.back() == ' ') text.remove_suffix(1);
  std::size_t v = 0;
  auto [p, ec] = std::from_chars(text.data(), text.data() + text.size(), v);
  if (ec != std::errc() || p != text.data() + text.size()) {
    throw SchemaError(std::string(what) + ": expected a non-negative integer, got '" + std::string(text) + "'");
  }
  return v;
}

}  // namespace

void ArchConfig::validate() const {
  if (Y == 0 || N == 0 || K == 0 || H == 0 || L == 0 || M == 0) {
    throw DomainError("architecture dimensions must all be >= 1, got [" + tuple_string() + "]");
  }
  if (dac_sharing == 0) throw DomainError("dac_sharing must be >= 1");
  if (mr_per_waveguide_limit == 0) throw DomainError("mr_per_waveguide_limit must be >= 1");
  if (bit_width <= 0) throw DomainError("bit_width must be positive");
}

std::string ArchConfig::tuple_string() const {
  return std::to_string(Y) + "," + std::to_string(N) + "," + std::to_string(K) + "," + std::to_string(H) + "," +
         std::to_string(L) + "," + std::to_string(M);
}

ArchConfig parse_arch_tuple(std::string_view text, ArchConfig base) {
  if (!text.empty() && text.front() == '[') text.remove_prefix(1);
  if (!text.empty() && text.back() == ']') text.remove_suffix(1);
  auto parts = ConfigFile::split_list(text);
  if (parts.size() != 6) throw SchemaError("architecture tuple needs six values Y,N,K,H,L,M, got '" + std::string(text) + "'");
  std::size_t* dims[] = {&base.Y, &base.N, &base.K, &base.H, &base.L, &base.M};
  const char* names[] = {"Y", "N", "K", "H", "L", "M"};
  for (std::size_t i = 0; i < 6; ++i) *dims[i] = parse_dim(parts[i], names[i]);
  base.validate();
  return base;
}

ArchConfig load_arch_config(const ConfigFile& cfg, ArchConfig base) {
  auto take = [&](std::string_view key, std::size_t& slot) {
    if (auto v = cfg.get(key)) {
      slot = parse_dim(*v, key);
      cfg.mark_used(key);
    }
  };
  if (auto t = cfg.get("arch.tuple")) {
    base = parse_arch_tuple(*t, base);
    cfg.mark_used("arch.tuple");
  }
  take("arch.y", base.Y);
  take("arch.n", base.N);
  take("arch.k", base.K);
  take("arch.h", base.H);
  take("arch.l", base.L);
  take("arch.m", base.M);
  take("arch.dac_sharing", base.dac_sharing);
  take("arch.mr_per_waveguide_limit", base.mr_per_waveguide_limit);
  std::size_t bits = static_cast<std::size_t>(base.bit_width);
  take("arch.bit_width", bits);
  base.bit_width = static_cast<int>(bits);
  base.validate();
  return base;
}

DeviceCounts& DeviceCounts::operator+=(const DeviceCounts& o) {
  mrs += o.mrs;
  broadband_mrs += o.broadband_mrs;
  waveguides += o.waveguides;
  vcsels += o.vcsels;
  photodetectors += o.photodetectors;
  dacs += o.dacs;
  adcs += o.adcs;
  soas += o.soas;
  return *this;
}

DeviceCounts operator*(std::uint64_t n, DeviceCounts c) {
  c.mrs *= n;
  c.broadband_mrs *= n;
  c.waveguides *= n;
  c.vcsels *= n;
  c.photodetectors *= n;
  c.dacs *= n;
  c.adcs *= n;
  c.soas *= n;
  return c;
}

std::uint64_t bank_dacs(std::size_t rows, std::size_t cols, std::size_t dac_sharing) {
  return rows * ((cols + dac_sharing - 1) / dac_sharing);
}

BlockInventory build_inventory(const ArchConfig& cfg, std::size_t s) {
  cfg.validate();
  if (s == 0) throw DomainError("dac_sharing must be >= 1");
  const std::uint64_t K = cfg.K, N = cfg.N, M = cfg.M, L = cfg.L;
  BlockInventory inv;

  // Activation and weight banks share one VCSEL array; each row is a
  // positive/negative waveguide pair read by one balanced detector.
  auto& c = inv.conv_block;
  c.mrs = 2 * K * N;
  c.broadband_mrs = K;
  c.waveguides = 2 * K;
  c.vcsels = N;
  c.photodetectors = 2 * K;
  c.dacs = 2 * bank_dacs(K, N, s) + K;
  c.adcs = K;

  auto& a = inv.activation_block;
  const std::uint64_t lanes = cfg.activation_lanes();
  a.mrs = lanes;
  a.waveguides = lanes;
  a.vcsels = lanes;
  a.photodetectors = 2 * lanes;
  a.dacs = lanes;
  a.adcs = lanes;
  a.soas = lanes;

  // Four upper banks (M x L), two value banks and the attention-apply bank (M x N).
  auto& h = inv.attention_head;
  h.mrs = 4 * M * L + 3 * M * N;
  h.waveguides = 6 * M;
  h.vcsels = L + 2 * N;
  h.photodetectors = 6 * M;
  h.dacs = 4 * bank_dacs(M, L, s) + 3 * bank_dacs(M, N, s);
  h.adcs = 3 * M;

  auto& la = inv.linear_add;
  la.mrs = 2 * M * L;
  la.waveguides = 2 * M + 1;
  la.vcsels = L + 2;
  la.photodetectors = 2 * M + 1;
  la.dacs = 2 * bank_dacs(M, L, s) + 2;
  la.adcs = M + 1;

  inv.residual_unit = cfg.Y * inv.conv_block;
  inv.residual_unit += inv.activation_block;
  inv.mha_unit = cfg.H * inv.attention_head;
  inv.mha_unit += inv.linear_add;
  inv.total = inv.residual_unit;
  inv.total += inv.mha_unit;
  return inv;
}

WaveguideVerdict check_waveguide_constraint(const ArchConfig& cfg) {
  cfg.validate();
  WaveguideVerdict v;
  struct Candidate {
    std::size_t wavelengths;
    const char* where;
  };
  const Candidate candidates[] = {
      {cfg.N, "conv/norm block waveguide (N)"},
      {cfg.L, "attention upper-path waveguide (L)"},
      {cfg.N, "attention value-path waveguide (N)"},
      {cfg.L, "linear-and-add waveguide (L)"},
  };
  for (const auto& c : candidates) {
    v.max_wavelengths = std::max(v.max_wavelengths, c.wavelengths);
    if (c.wavelengths > cfg.mr_per_waveguide_limit && v.feasible) {
      v.feasible = false;
      v.offending = std::string(c.where) + " carries " + std::to_string(c.wavelengths) + " wavelengths, limit " +
                    std::to_string(cfg.mr_per_waveguide_limit) + " MRs per waveguide";
    }
  }
  return v;
}

BpdReading bpd_dot(std::span<const double> a, std::span<const double> b) {
  if (a.size() != b.size()) throw ShapeError("bpd_dot: operand lengths differ");
  BpdReading r;
  for (std::size_t i = 0; i < a.size(); ++i) {
    double p = a[i] * b[i];
    if (p >= 0.0)
      r.positive += p;
    else
      r.negative -= p;
  }
  return r;
}

}  // namespace difflight
