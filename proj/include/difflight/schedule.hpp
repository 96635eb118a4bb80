#pragma once

#include <array>
#include <cstdint>
#include <iosfwd>
#include <string>
#include <string_view>
#include <vector>

#include "difflight/architecture.hpp"
#include "difflight/devices.hpp"
#include "difflight/workload.hpp"

namespace difflight {

struct OptimizationSet {
  bool sparsity = false;
  bool pipelining = false;
  bool dac_sharing = false;

  static OptimizationSet none() { return {}; }
  static OptimizationSet all() { return {true, true, true}; }
  std::string label() const;  // "none", "all", or e.g. "sparsity+pipeline"
  friend bool operator==(const OptimizationSet&, const OptimizationSet&) = default;
};

// Accepts none, all, sparsity, pipeline, dacshare, or a comma list of the last three.
OptimizationSet parse_optimizations(std::string_view text);

// All eight on/off combinations, none first and all last.
std::vector<OptimizationSet> all_optimization_combinations();

enum class ResourceKind : std::uint8_t { ConvBlock, ActivationBlock, HeadUpper, HeadValue, HeadApply, LinearAdd, AddLane };

struct ResourceId {
  ResourceKind kind = ResourceKind::ConvBlock;
  std::uint16_t index = 0;
  friend bool operator==(const ResourceId&, const ResourceId&) = default;
};

std::string resource_name(ResourceId id);

// Largest (rows, cols) a single pass may occupy on the given resource.
std::pair<std::size_t, std::size_t> resource_capacity(ResourceKind kind, const ArchConfig& cfg);

enum class Phase : std::uint8_t { DacConvert, MrTune, OpticalPropagate, PdDetect, AdcConvert };
inline constexpr std::size_t kPhaseCount = 5;
const char* phase_name(Phase p);

struct PhaseCost {
  double latency_s = 0.0;
  double energy_j = 0.0;
};

// One activation of a block: operands converted, MRs tuned, light propagated,
// detected and digitised.
struct TilePass {
  std::uint32_t task = 0;
  std::uint32_t layer = 0;
  ResourceId block;
  std::uint32_t row_begin = 0;  // first dot product (or element) in task order
  std::uint32_t rows_used = 0;
  std::uint32_t col_tile = 0;   // inner-dimension tile index
  std::uint32_t cols_used = 0;
  std::uint64_t macs = 0;
  std::uint32_t lane_ops = 0;   // elements handled by element-wise passes
  bool thermo_optic = false;
  std::array<PhaseCost, kPhaseCount> phases{};
  double soa_energy_j = 0.0;  // share of the optical_propagate energy drawn by SOAs
  double start_s = 0.0, finish_s = 0.0;

  PhaseCost& phase(Phase p) { return phases[static_cast<std::size_t>(p)]; }
  const PhaseCost& phase(Phase p) const { return phases[static_cast<std::size_t>(p)]; }
  double latency() const;
  double energy() const;
};

enum class TaskRole : std::uint8_t {
  ConvGemm,
  TransposeConvGemm,
  NormStats,
  NormAffine,
  SwishLanes,
  ResidualLanes,
  Concat,
  LinearGemm,
  AttnQuery,
  AttnQueryKey,
  AttnLogits,
  AttnValue,
  Softmax,
  AttnApply,
  AttnConcat,
  AttnOutput,
  AttnResidual,
};

const char* task_role_name(TaskRole r);

// Dot products of a lowered GEMM: dot d = r * cols + p, each of length
// `length[d]` (or `inner` when length is empty). `order` lists dot indices in
// the order they were packed onto bank rows (identity when empty).
struct GemmShape {
  std::uint32_t rows = 0, cols = 0, inner = 0;
  std::uint32_t bank_rows = 0, bank_cols = 0;
  std::vector<std::uint32_t> order;
  std::vector<std::uint32_t> length;  // per column p when non-empty (shared by every row)

  std::uint64_t dots() const { return std::uint64_t{rows} * cols; }
  std::uint32_t dot_at(std::uint32_t slot) const { return order.empty() ? slot : order[slot]; }
  std::uint32_t dot_length(std::uint32_t dot) const { return length.empty() ? inner : length[dot % cols]; }
};

enum class EcuOp : std::uint8_t { Compare, Subtract, Add, LutExp, LutLn, BufferAccess };
const char* ecu_op_name(EcuOp op);

// Digital work in the electronic control unit. Softmax stages per logit row:
// 1 running max, 2 ln-sum-exp of the shifted logits, 3 subtraction, 4 exp.
struct EcuEvent {
  std::uint32_t task = 0;
  EcuOp op = EcuOp::Add;
  std::uint32_t row = 0;
  std::uint8_t stage = 0;
  std::uint64_t count = 0;
  double latency_s = 0.0;
  double energy_j = 0.0;
  double start_s = 0.0, finish_s = 0.0;
};

struct Task {
  std::uint32_t id = 0;
  std::uint32_t layer = 0;
  TaskRole role = TaskRole::ConvGemm;
  std::uint32_t head = 0;
  std::vector<std::uint32_t> deps;  // tasks of the same layer that must finish first
  GemmShape gemm;
  std::uint64_t elements = 0;  // element-wise tasks
  std::uint32_t pass_begin = 0, pass_end = 0;
  std::uint32_t event_begin = 0, event_end = 0;
  double start_s = 0.0, finish_s = 0.0;
};

struct LayerSpan {
  std::string name;
  LayerKind kind = LayerKind::Conv;
  std::string block;
  std::uint32_t task_begin = 0, task_end = 0;
  std::uint64_t macs = 0;        // executed
  std::uint64_t dense_macs = 0;  // before sparsity
  double start_s = 0.0, finish_s = 0.0;
};

// Tunables of the digital side that the device table does not cover.
struct EcuConstants {
  double buffer_access_energy_j = 0.05e-12;  // per 8-bit SRAM access
  std::size_t lut_entries = 256;
};

// One timestep of the reverse process; timesteps run back to back.
struct Schedule {
  std::string workload;
  ArchConfig arch;
  OptimizationSet opts;
  std::size_t dac_sharing = 1;  // factor in effect
  std::size_t timesteps = 1;
  std::vector<TilePass> passes;
  std::vector<Task> tasks;
  std::vector<EcuEvent> events;
  std::vector<LayerSpan> layers;
  double timestep_latency_s = 0.0;

  double latency_s() const { return timestep_latency_s * static_cast<double>(timesteps); }
  std::uint64_t executed_macs() const;  // per timestep
  std::uint64_t dense_macs() const;     // per timestep
};

struct GemmTile {
  std::uint32_t row_begin = 0, rows_used = 0;
  std::uint32_t col_tile = 0, cols_used = 0;
  std::uint64_t macs = 0;
};

struct GemmTiling {
  std::size_t row_tiles = 0;
  std::vector<GemmTile> tiles;  // row tile major, inner tile minor
  std::uint64_t accumulations = 0;  // digital partial-sum additions

  std::size_t passes() const { return tiles.size(); }
};

// Dense tiling: ceil(rows/bank_rows) x ceil(inner/bank_cols) passes.
GemmTiling tile_gemm(std::size_t rows, std::size_t inner, std::size_t bank_rows, std::size_t bank_cols);

// Ragged tiling of dot products whose lengths are sorted in descending order:
// each group of bank_rows dots takes ceil(longest/bank_cols) passes.
GemmTiling tile_gemm_ragged(const std::vector<std::uint32_t>& sorted_lengths, std::size_t bank_rows,
                            std::size_t bank_cols);

// VCSEL, SOA, PD, tuning and PD in sequence: the latency of one activation lane.
double activation_lane_latency(const DeviceProfile& profile);

Schedule compile(const WorkloadGraph& graph, const ArchConfig& cfg, const OptimizationSet& opts,
                 const DeviceProfile& profile = {}, const EcuConstants& ecu = {});

// Single-layer views used by tests and the trace tooling.
std::vector<TilePass> schedule_conv(const LayerSpec& layer, const ArchConfig& cfg, bool sparsity,
                                    const DeviceProfile& profile = {});
Schedule schedule_attention_head(const LayerSpec& layer, const ArchConfig& cfg, const DeviceProfile& profile = {});
std::vector<TilePass> schedule_activation(const LayerSpec& layer, const ArchConfig& cfg,
                                          const DeviceProfile& profile = {});

// Stretches the DAC phase of every pass that spans several columns by the
// number of columns one DAC set serves. Sharing 1 leaves the schedule untouched.
Schedule apply_dac_sharing(Schedule schedule, std::size_t sharing);

// Recomputes pass/event start and finish times. Without pipelining everything
// runs back to back in list order; with it, passes start as soon as their
// dependencies and block allow and a block tunes pass i+1 while pass i is
// still propagating.
Schedule apply_pipelining(Schedule schedule, bool enabled);
void retime(Schedule& schedule, bool pipelined);

// Sum of every pass and event latency in one timestep.
double serial_latency(const Schedule& schedule);

// One CSV record per pass and per ECU event.
void write_trace(std::ostream& out, const Schedule& schedule);
inline constexpr std::string_view kTraceHeader =
    "record,index,layer,layer_name,task,role,block,row_begin,rows_used,col_tile,cols_used,macs,lane_ops,tuning,"
    "start_s,finish_s,dac_latency_s,dac_energy_j,tune_latency_s,tune_energy_j,propagate_latency_s,"
    "propagate_energy_j,detect_latency_s,detect_energy_j,adc_latency_s,adc_energy_j,ecu_op,count,depends_on";

}  // namespace difflight
