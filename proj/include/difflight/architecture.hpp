#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <string_view>

#include "difflight/config_file.hpp"

namespace difflight {

// Hardware template: a Residual unit of Y conv/norm blocks (K x N banks) plus an
// activation block, and an MHA unit of H attention-head blocks (M x L upper
// banks, M x N value banks) plus a linear-and-add block (M x L banks).
struct ArchConfig {
  std::size_t Y = 4, N = 12, K = 3, H = 6, L = 6, M = 3;
  std::size_t dac_sharing = 2;
  std::size_t mr_per_waveguide_limit = 36;
  int bit_width = 8;

  void validate() const;  // DomainError on zero dimensions
  std::size_t activation_lanes() const { return K * N; }
  std::string tuple_string() const;  // "4,12,3,6,6,3"
  friend bool operator==(const ArchConfig&, const ArchConfig&) = default;
};

// "Y,N,K,H,L,M", optionally bracketed.
ArchConfig parse_arch_tuple(std::string_view text, ArchConfig base = {});
ArchConfig load_arch_config(const ConfigFile& cfg, ArchConfig base = {});

struct DeviceCounts {
  std::uint64_t mrs = 0;
  std::uint64_t broadband_mrs = 0;
  std::uint64_t waveguides = 0;
  std::uint64_t vcsels = 0;
  std::uint64_t photodetectors = 0;  // a balanced detector counts as two
  std::uint64_t dacs = 0;
  std::uint64_t adcs = 0;
  std::uint64_t soas = 0;

  DeviceCounts& operator+=(const DeviceCounts& o);
  friend DeviceCounts operator*(std::uint64_t n, DeviceCounts c);
  friend bool operator==(const DeviceCounts&, const DeviceCounts&) = default;
};

struct BlockInventory {
  DeviceCounts conv_block, activation_block, attention_head, linear_add;
  DeviceCounts residual_unit, mha_unit, total;
};

// DAC sets per bank: one per row per group of `dac_sharing` columns.
std::uint64_t bank_dacs(std::size_t rows, std::size_t cols, std::size_t dac_sharing);

BlockInventory build_inventory(const ArchConfig& cfg, std::size_t dac_sharing);
inline BlockInventory build_inventory(const ArchConfig& cfg) { return build_inventory(cfg, cfg.dac_sharing); }

struct WaveguideVerdict {
  bool feasible = true;
  std::size_t max_wavelengths = 0;
  std::string offending;  // empty when feasible
};

WaveguideVerdict check_waveguide_constraint(const ArchConfig& cfg);

// Same-wavelength intensity aggregation on one waveguide.
inline double coherent_sum(double a, double b) { return a + b; }

// Signed dot product on a positive/negative waveguide pair: each product lands
// on exactly one arm and the balanced detector returns positive - negative.
struct BpdReading {
  double positive = 0.0;
  double negative = 0.0;
  double value() const { return positive - negative; }
};

BpdReading bpd_dot(std::span<const double> a, std::span<const double> b);

}  // namespace difflight
