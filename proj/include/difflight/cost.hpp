#pragma once

#include <array>
#include <iosfwd>
#include <string>
#include <string_view>
#include <vector>

#include <json.hpp>

#include "difflight/config_file.hpp"
#include "difflight/devices.hpp"
#include "difflight/schedule.hpp"

namespace difflight {

enum class EnergyClass : std::uint8_t { Laser, Tuning, Dac, Adc, Photodetector, Soa, EcuDigital, Buffer };
inline constexpr std::size_t kEnergyClassCount = 8;
const char* energy_class_name(EnergyClass c);

using EnergyBreakdown = std::array<double, kEnergyClassCount>;

struct CostParams {
  // Idle draw of every installed DAC while the accelerator runs, as a fraction
  // of its active power. Fewer DACs (sharing) and shorter runs (pipelining) cut it.
  double dac_static_fraction = 0.0015;
  // DAC, ADC, PD and SOA powered for the whole run instead of only during their phase.
  bool always_on = false;
  EcuConstants ecu;
};

CostParams load_cost_params(const ConfigFile& cfg, CostParams base = {});

struct LayerCost {
  std::string name;
  LayerKind kind = LayerKind::Conv;
  std::string block;
  std::uint64_t passes = 0;
  std::uint64_t macs = 0, dense_macs = 0;
  double latency_s = 0.0;  // one timestep
  double energy_j = 0.0;   // one timestep
  EnergyBreakdown breakdown{};
};

struct ResourceUtilization {
  std::string resource;
  double busy_s = 0.0;    // one timestep
  double fraction = 0.0;  // busy / timestep latency, at most 1
};

struct LinkCheck {
  std::string path;
  std::size_t rows = 0, cols = 0;
  double laser_dbm = 0.0, loss_db = 0.0, received_dbm = 0.0;
  bool feasible = true;
  double shortfall_db = 0.0;
};

struct CostReport {
  std::string workload, arch, opts;
  std::size_t timesteps = 1;
  double latency_s = 0.0;
  double energy_j = 0.0;
  EnergyBreakdown breakdown{};
  double timestep_latency_s = 0.0, timestep_energy_j = 0.0;
  std::uint64_t macs = 0, dense_macs = 0, eliminated_macs = 0;  // all timesteps
  std::uint64_t passes = 0;                                      // one timestep
  double gops = 0.0;
  double epb_j_per_bit = 0.0;
  double static_power_w = 0.0;
  std::vector<LayerCost> layers;
  std::vector<ResourceUtilization> utilization;
  std::vector<LinkCheck> links;
  bool links_feasible = true;

  double breakdown_sum() const;
  std::uint64_t processed_bits(int bit_width) const { return 2 * macs * static_cast<std::uint64_t>(bit_width); }
};

// Latency follows the schedule's timing; energy is the sum of pass phases,
// ECU events and idle DAC draw. GOPS counts two operations per executed MAC;
// EPB divides energy by 2 * MACs * bit_width processed bits.
CostReport aggregate(const Schedule& schedule, const DeviceProfile& profile = {}, const LossBudget& budget = {},
                     const CostParams& params = {});

// Report over layers [begin, end) only; parts of a split schedule sum to the whole.
CostReport aggregate_layers(const Schedule& schedule, std::size_t begin, std::size_t end,
                            const DeviceProfile& profile = {}, const LossBudget& budget = {},
                            const CostParams& params = {});

std::vector<LinkCheck> check_links(const ArchConfig& cfg, const DeviceProfile& profile, const LossBudget& budget);

struct AblationRow {
  std::string workload, variant;
  double energy_j = 0.0, normalized_energy = 0.0, latency_s = 0.0, gops = 0.0, epb_j_per_bit = 0.0;
};

// Baseline, each optimization alone, then all three; energy normalised to baseline.
std::vector<AblationRow> ablation(const WorkloadGraph& graph, const ArchConfig& cfg, const DeviceProfile& profile = {},
                                  const LossBudget& budget = {}, const CostParams& params = {});

struct ComparisonRow {
  std::size_t rank = 0;
  std::string label;
  double latency_s = 0.0, energy_j = 0.0, gops = 0.0, epb_j_per_bit = 0.0;
  double gops_ratio = 0.0, epb_ratio = 0.0;  // against the reference report
};

// Ranked by GOPS (descending, stable); ratios are taken against reports[reference].
std::vector<ComparisonRow> compare_table(const std::vector<CostReport>& reports, std::size_t reference = 0);

inline constexpr std::string_view kReportHeader =
    "scope,name,kind,block,passes,macs,dense_macs,latency_s,energy_j,laser_j,tuning_j,dac_j,adc_j,photodetector_j,"
    "soa_j,ecu_j,buffer_j,gops,epb_j_per_bit";
inline constexpr std::string_view kAblationHeader =
    "workload,variant,energy_j,normalized_energy,latency_s,gops,epb_j_per_bit";
inline constexpr std::string_view kCompareHeader =
    "rank,label,latency_s,energy_j,gops,epb_j_per_bit,gops_ratio,epb_ratio";

void write_report_csv(std::ostream& out, const CostReport& report);
void write_ablation_csv(std::ostream& out, const std::vector<AblationRow>& rows, bool header = true);
void write_compare_csv(std::ostream& out, const std::vector<ComparisonRow>& rows);
nlohmann::json to_json(const CostReport& report);
void print_summary(std::ostream& out, const CostReport& report);

}  // namespace difflight
