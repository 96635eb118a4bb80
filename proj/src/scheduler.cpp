#include <algorithm>
#include <cmath>
#include <numeric>
#include <stdexcept>

#include "difflight/error.hpp"
#include "difflight/numerics.hpp"
#include "difflight/schedule.hpp"

namespace difflight {

std::string OptimizationSet::label() const {
  if (!sparsity && !pipelining && !dac_sharing) return "none";
  if (sparsity && pipelining && dac_sharing) return "all";
  std::string out;
  auto add = [&](const char* s) {
    if (!out.empty()) out += '+';
    out += s;
  };
  if (sparsity) add("sparsity");
  if (pipelining) add("pipeline");
  if (dac_sharing) add("dacshare");
  return out;
}

OptimizationSet parse_optimizations(std::string_view text) {
  OptimizationSet o;
  for (const auto& item : ConfigFile::split_list(text)) {
    if (item == "none") continue;
    if (item == "all") {
      o = OptimizationSet::all();
    } else if (item == "sparsity") {
      o.sparsity = true;
    } else if (item == "pipeline" || item == "pipelining") {
      o.pipelining = true;
    } else if (item == "dacshare" || item == "dac_sharing") {
      o.dac_sharing = true;
    } else {
      throw SchemaError("unknown optimization '" + item + "' (expected none, sparsity, pipeline, dacshare or all)");
    }
  }
  return o;
}

std::vector<OptimizationSet> all_optimization_combinations() {
  std::vector<OptimizationSet> out;
  for (int bits = 0; bits < 8; ++bits) out.push_back({(bits & 1) != 0, (bits & 2) != 0, (bits & 4) != 0});
  return out;
}

std::string resource_name(ResourceId id) {
  const char* base = "?";
  switch (id.kind) {
    case ResourceKind::ConvBlock: base = "conv"; break;
    case ResourceKind::ActivationBlock: base = "activation"; break;
    case ResourceKind::HeadUpper: base = "head_upper"; break;
    case ResourceKind::HeadValue: base = "head_value"; break;
    case ResourceKind::HeadApply: base = "head_apply"; break;
    case ResourceKind::LinearAdd: base = "linear_add"; break;
    case ResourceKind::AddLane: base = "add_lane"; break;
  }
  return std::string(base) + std::to_string(id.index);
}

std::pair<std::size_t, std::size_t> resource_capacity(ResourceKind kind, const ArchConfig& cfg) {
  switch (kind) {
    case ResourceKind::ConvBlock: return {cfg.K, cfg.N};
    case ResourceKind::ActivationBlock: return {cfg.activation_lanes(), 1};
    case ResourceKind::HeadUpper: return {cfg.M, cfg.L};
    case ResourceKind::HeadValue:
    case ResourceKind::HeadApply: return {cfg.M, cfg.N};
    case ResourceKind::LinearAdd: return {cfg.M, cfg.L};
    case ResourceKind::AddLane: return {1, 1};
  }
  return {0, 0};
}

const char* phase_name(Phase p) {
  switch (p) {
    case Phase::DacConvert: return "dac_convert";
    case Phase::MrTune: return "mr_tune";
    case Phase::OpticalPropagate: return "optical_propagate";
    case Phase::PdDetect: return "pd_detect";
    case Phase::AdcConvert: return "adc_convert";
  }
  return "?";
}

double TilePass::latency() const {
  double t = 0.0;
  for (const auto& p : phases) t += p.latency_s;
  return t;
}

double TilePass::energy() const {
  double e = 0.0;
  for (const auto& p : phases) e += p.energy_j;
  return e;
}

const char* task_role_name(TaskRole r) {
  switch (r) {
    case TaskRole::ConvGemm: return "conv";
    case TaskRole::TransposeConvGemm: return "conv_transpose";
    case TaskRole::NormStats: return "norm_stats";
    case TaskRole::NormAffine: return "norm_affine";
    case TaskRole::SwishLanes: return "swish";
    case TaskRole::ResidualLanes: return "residual_add";
    case TaskRole::Concat: return "concat";
    case TaskRole::LinearGemm: return "linear";
    case TaskRole::AttnQuery: return "attn_query";
    case TaskRole::AttnQueryKey: return "attn_query_key";
    case TaskRole::AttnLogits: return "attn_logits";
    case TaskRole::AttnValue: return "attn_value";
    case TaskRole::Softmax: return "softmax";
    case TaskRole::AttnApply: return "attn_apply";
    case TaskRole::AttnConcat: return "attn_concat";
    case TaskRole::AttnOutput: return "attn_output";
    case TaskRole::AttnResidual: return "attn_residual";
  }
  return "?";
}

const char* ecu_op_name(EcuOp op) {
  switch (op) {
    case EcuOp::Compare: return "compare";
    case EcuOp::Subtract: return "subtract";
    case EcuOp::Add: return "add";
    case EcuOp::LutExp: return "lut_exp";
    case EcuOp::LutLn: return "lut_ln";
    case EcuOp::BufferAccess: return "buffer";
  }
  return "?";
}

std::uint64_t Schedule::executed_macs() const {
  std::uint64_t m = 0;
  for (const auto& l : layers) m += l.macs;
  return m;
}

std::uint64_t Schedule::dense_macs() const {
  std::uint64_t m = 0;
  for (const auto& l : layers) m += l.dense_macs;
  return m;
}

GemmTiling tile_gemm(std::size_t rows, std::size_t inner, std::size_t bank_rows, std::size_t bank_cols) {
  if (rows == 0 || inner == 0 || bank_rows == 0 || bank_cols == 0) throw DomainError("tile_gemm: all dimensions must be >= 1");
  GemmTiling t;
  t.row_tiles = (rows + bank_rows - 1) / bank_rows;
  const std::size_t inner_tiles = (inner + bank_cols - 1) / bank_cols;
  t.tiles.reserve(t.row_tiles * inner_tiles);
  for (std::size_t rt = 0; rt < t.row_tiles; ++rt) {
    const auto r0 = static_cast<std::uint32_t>(rt * bank_rows);
    const auto nr = static_cast<std::uint32_t>(std::min(bank_rows, rows - r0));
    for (std::size_t ct = 0; ct < inner_tiles; ++ct) {
      const auto nc = static_cast<std::uint32_t>(std::min(bank_cols, inner - ct * bank_cols));
      t.tiles.push_back({r0, nr, static_cast<std::uint32_t>(ct), nc, std::uint64_t{nr} * nc});
    }
  }
  t.accumulations = std::uint64_t{rows} * (inner_tiles - 1);
  return t;
}

GemmTiling tile_gemm_ragged(const std::vector<std::uint32_t>& lengths, std::size_t bank_rows, std::size_t bank_cols) {
  if (bank_rows == 0 || bank_cols == 0) throw DomainError("tile_gemm: bank dimensions must be >= 1");
  if (!std::is_sorted(lengths.begin(), lengths.end(), std::greater<>())) {
    throw DomainError("tile_gemm_ragged: lengths must be sorted in descending order");
  }
  GemmTiling t;
  const std::size_t n = lengths.size();
  t.row_tiles = (n + bank_rows - 1) / bank_rows;
  for (std::size_t rt = 0; rt < t.row_tiles; ++rt) {
    const std::size_t r0 = rt * bank_rows, r1 = std::min(n, r0 + bank_rows);
    const std::size_t longest = lengths[r0];
    for (std::size_t r = r0; r < r1; ++r)
      if (lengths[r] > 0) t.accumulations += (lengths[r] + bank_cols - 1) / bank_cols - 1;
    for (std::size_t ct = 0; ct * bank_cols < longest; ++ct) {
      const std::size_t begin = ct * bank_cols;
      GemmTile tile;
      tile.row_begin = static_cast<std::uint32_t>(r0);
      tile.col_tile = static_cast<std::uint32_t>(ct);
      tile.cols_used = static_cast<std::uint32_t>(std::min(bank_cols, longest - begin));
      // Sorted lengths keep the rows that still have work at the front of the group.
      for (std::size_t r = r0; r < r1 && lengths[r] > begin; ++r) {
        ++tile.rows_used;
        tile.macs += std::min(bank_cols, lengths[r] - begin);
      }
      t.tiles.push_back(tile);
    }
  }
  return t;
}

double activation_lane_latency(const DeviceProfile& p) {
  return p.vcsel.latency_s + p.soa.latency_s + p.photodetector.latency_s + p.eo_tune.latency_s +
         p.photodetector.latency_s;
}

namespace {

class Compiler {
 public:
  Compiler(const WorkloadGraph& graph, const ArchConfig& cfg, const OptimizationSet& opts, const DeviceProfile& profile,
           const EcuConstants& ecu)
      : graph_(graph), cfg_(cfg), opts_(opts), prof_(profile), ecu_(ecu) {
    if (prof_.thermal_event_rate > 0.0) thermal_period_ = static_cast<std::uint64_t>(std::ceil(1.0 / prof_.thermal_event_rate));
  }

  Schedule run() {
    s_.workload = graph_.name;
    s_.arch = cfg_;
    s_.opts = opts_;
    s_.timesteps = graph_.timesteps;
    for (std::size_t i = 0; i < graph_.layers.size(); ++i) add_layer(static_cast<std::uint32_t>(i));
    return std::move(s_);
  }

 private:
  // ---- tasks -------------------------------------------------------------

  std::uint32_t open_task(TaskRole role, std::vector<std::uint32_t> deps = {}, std::uint32_t head = 0) {
    Task t;
    t.id = static_cast<std::uint32_t>(s_.tasks.size());
    t.layer = layer_;
    t.role = role;
    t.head = head;
    t.deps = std::move(deps);
    t.pass_begin = t.pass_end = static_cast<std::uint32_t>(s_.passes.size());
    t.event_begin = t.event_end = static_cast<std::uint32_t>(s_.events.size());
    s_.tasks.push_back(std::move(t));
    return s_.tasks.back().id;
  }

  void close_task(std::uint32_t id) {
    Task& t = s_.tasks[id];
    t.pass_end = static_cast<std::uint32_t>(s_.passes.size());
    t.event_end = static_cast<std::uint32_t>(s_.events.size());
  }

  void event(std::uint32_t task, EcuOp op, std::uint64_t count, std::uint32_t row = 0, std::uint8_t stage = 0) {
    if (count == 0) return;
    EcuEvent e;
    e.task = task;
    e.op = op;
    e.row = row;
    e.stage = stage;
    e.count = count;
    const DeviceSpec* dev = nullptr;
    switch (op) {
      case EcuOp::Compare: dev = &prof_.comparator; break;
      case EcuOp::Subtract:
      case EcuOp::Add: dev = &prof_.subtractor; break;
      case EcuOp::LutExp:
      case EcuOp::LutLn: dev = &prof_.lut; break;
      case EcuOp::BufferAccess: break;
    }
    if (dev) {
      e.latency_s = static_cast<double>(count) * dev->latency_s;
      e.energy_j = static_cast<double>(count) * dev->energy_per_op();
    } else {
      e.energy_j = static_cast<double>(count) * ecu_.buffer_access_energy_j;
    }
    s_.events.push_back(e);
  }

  // ---- pass costs --------------------------------------------------------

  TuningChoice next_tuning(TilePass& p) {
    bool thermal = false;
    if (thermal_period_ > 0) thermal = (++tuned_passes_ % thermal_period_) == 0;
    p.thermo_optic = thermal;
    return select_tuning(prof_.mean_shift_nm, prof_.eo_range_nm, thermal, prof_);
  }

  // Both operands of every MAC are converted and imprinted on an MR.
  void gemm_phases(TilePass& p, std::uint64_t imprinted) {
    const double rows = p.rows_used, cols = p.cols_used, mrs = static_cast<double>(imprinted);
    const TuningChoice tune = next_tuning(p);
    p.phase(Phase::DacConvert) = {prof_.dac8.latency_s, mrs * prof_.dac8.energy_per_op()};
    p.phase(Phase::MrTune) = {tune.latency_s, mrs * tune.energy_j};
    p.phase(Phase::OpticalPropagate) = {prof_.vcsel.latency_s,
                                        cols * prof_.vcsel.power_w * (prof_.vcsel.latency_s + prof_.photodetector.latency_s)};
    p.phase(Phase::PdDetect) = {prof_.photodetector.latency_s, rows * 2.0 * prof_.photodetector.energy_per_op()};
    p.phase(Phase::AdcConvert) = {prof_.adc8.latency_s, rows * prof_.adc8.energy_per_op()};
  }

  void swish_phases(TilePass& p) {
    const double n = p.rows_used;
    const TuningChoice tune = next_tuning(p);
    const double t_pd = prof_.photodetector.latency_s;
    p.soa_energy_j = n * prof_.soa.energy_per_op();
    p.phase(Phase::DacConvert) = {prof_.dac8.latency_s, n * prof_.dac8.energy_per_op()};
    p.phase(Phase::MrTune) = {tune.latency_s, n * tune.energy_j};
    p.phase(Phase::OpticalPropagate) = {
        prof_.vcsel.latency_s + prof_.soa.latency_s,
        n * prof_.vcsel.power_w * (prof_.vcsel.latency_s + prof_.soa.latency_s + t_pd) + p.soa_energy_j};
    p.phase(Phase::PdDetect) = {2.0 * t_pd, n * 2.0 * prof_.photodetector.energy_per_op()};
    p.phase(Phase::AdcConvert) = {prof_.adc8.latency_s, n * prof_.adc8.energy_per_op()};
  }

  // Two same-wavelength VCSELs summed on one detector; no MR involved.
  void coherent_add_phases(TilePass& p) {
    const double n = p.rows_used;
    p.phase(Phase::DacConvert) = {prof_.dac8.latency_s, 2.0 * n * prof_.dac8.energy_per_op()};
    p.phase(Phase::OpticalPropagate) = {
        prof_.vcsel.latency_s, 2.0 * n * prof_.vcsel.power_w * (prof_.vcsel.latency_s + prof_.photodetector.latency_s)};
    p.phase(Phase::PdDetect) = {prof_.photodetector.latency_s, n * prof_.photodetector.energy_per_op()};
    p.phase(Phase::AdcConvert) = {prof_.adc8.latency_s, n * prof_.adc8.energy_per_op()};
  }

  ResourceId conv_block() { return {ResourceKind::ConvBlock, static_cast<std::uint16_t>(conv_rr_++ % cfg_.Y)}; }

  // ---- GEMM tasks --------------------------------------------------------

  // Emits the passes of one lowered GEMM. `column_lengths` holds per-column dot
  // lengths for a sparse reduction (empty for dense operands).
  std::uint32_t gemm_task(TaskRole role, std::size_t rows, std::size_t cols, std::size_t inner, ResourceKind kind,
                          std::uint16_t index, std::vector<std::uint32_t> deps, std::uint32_t head = 0,
                          std::vector<std::uint32_t> column_lengths = {}) {
    const auto [bank_rows, bank_cols] = resource_capacity(kind, cfg_);
    const std::uint32_t id = open_task(role, std::move(deps), head);
    GemmShape g;
    g.rows = static_cast<std::uint32_t>(rows);
    g.cols = static_cast<std::uint32_t>(cols);
    g.inner = static_cast<std::uint32_t>(inner);
    g.bank_rows = static_cast<std::uint32_t>(bank_rows);
    g.bank_cols = static_cast<std::uint32_t>(bank_cols);

    GemmTiling tiling;
    if (column_lengths.empty()) {
      tiling = tile_gemm(rows * cols, inner, bank_rows, bank_cols);
    } else {
      g.length = std::move(column_lengths);
      g.order.resize(rows * cols);
      std::iota(g.order.begin(), g.order.end(), 0u);
      std::stable_sort(g.order.begin(), g.order.end(),
                       [&](std::uint32_t a, std::uint32_t b) { return g.dot_length(a) > g.dot_length(b); });
      std::vector<std::uint32_t> sorted(g.order.size());
      for (std::size_t i = 0; i < sorted.size(); ++i) sorted[i] = g.dot_length(g.order[i]);
      tiling = tile_gemm_ragged(sorted, bank_rows, bank_cols);
    }

    std::uint64_t reads = 0, writes = 0;
    for (const GemmTile& tile : tiling.tiles) {
      TilePass p;
      p.task = id;
      p.layer = layer_;
      p.block = kind == ResourceKind::ConvBlock ? conv_block() : ResourceId{kind, index};
      p.row_begin = tile.row_begin;
      p.rows_used = tile.rows_used;
      p.col_tile = tile.col_tile;
      p.cols_used = tile.cols_used;
      p.macs = tile.macs;
      gemm_phases(p, 2 * p.macs);
      reads += 2 * p.macs;
      writes += p.rows_used;
      span_->macs += p.macs;
      s_.passes.push_back(p);
    }
    s_.tasks[id].gemm = std::move(g);
    event(id, EcuOp::Add, tiling.accumulations);
    event(id, EcuOp::BufferAccess, reads + writes);
    close_task(id);
    return id;
  }

  // Element-wise work spread over `lanes` parallel lanes.
  std::uint32_t lane_task(TaskRole role, std::uint64_t elements, ResourceKind kind, std::vector<std::uint32_t> deps) {
    const std::uint32_t id = open_task(role, std::move(deps));
    s_.tasks[id].elements = elements;
    const std::size_t lanes = resource_capacity(kind, cfg_).first;
    std::uint64_t reads = 0;
    for (std::uint64_t begin = 0; begin < elements; begin += lanes) {
      TilePass p;
      p.task = id;
      p.layer = layer_;
      p.block = {kind, 0};
      p.row_begin = static_cast<std::uint32_t>(begin);
      p.rows_used = static_cast<std::uint32_t>(std::min<std::uint64_t>(lanes, elements - begin));
      p.cols_used = 1;
      p.lane_ops = p.rows_used;
      if (role == TaskRole::SwishLanes) {
        swish_phases(p);
        reads += p.rows_used;
      } else {
        coherent_add_phases(p);
        reads += 2 * p.rows_used;
      }
      s_.passes.push_back(p);
    }
    event(id, EcuOp::BufferAccess, reads + elements);
    close_task(id);
    return id;
  }

  // ---- layers ------------------------------------------------------------

  void add_layer(std::uint32_t index) {
    layer_ = index;
    const LayerSpec& l = graph_.layers[index];
    LayerSpan span;
    span.name = l.name;
    span.kind = l.kind;
    span.block = l.block;
    span.task_begin = static_cast<std::uint32_t>(s_.tasks.size());
    span.dense_macs = layer_macs(l);
    s_.layers.push_back(span);
    span_ = &s_.layers.back();

    switch (l.kind) {
      case LayerKind::Conv:
        gemm_task(TaskRole::ConvGemm, l.out_channels, l.output.positions(), l.input.channels * l.kernel * l.kernel,
                  ResourceKind::ConvBlock, 0, {});
        break;
      case LayerKind::ConvTranspose: {
        std::vector<std::uint32_t> lengths;
        if (opts_.sparsity && l.stride >= 2) {
          auto sp = numerics::transpose_conv_sparsity(l.input.channels, l.input.height, l.input.width, l.kernel,
                                                      l.stride, l.padding);
          lengths.reserve(sp.kept.size());
          for (const auto& k : sp.kept) lengths.push_back(static_cast<std::uint32_t>(k.size()));
        }
        gemm_task(TaskRole::TransposeConvGemm, l.out_channels, l.output.positions(),
                  l.input.channels * l.kernel * l.kernel, ResourceKind::ConvBlock, 0, {}, 0, std::move(lengths));
        break;
      }
      case LayerKind::GroupNorm: add_group_norm(l); break;
      case LayerKind::Swish:
        lane_task(TaskRole::SwishLanes, l.input.elements(), ResourceKind::ActivationBlock, {});
        break;
      case LayerKind::ResidualAdd:
        if (l.concat) {
          std::uint32_t id = open_task(TaskRole::Concat);
          event(id, EcuOp::BufferAccess, 2 * l.output.elements());
          close_task(id);
        } else {
          lane_task(TaskRole::ResidualLanes, l.output.elements(), ResourceKind::ActivationBlock, {});
        }
        break;
      case LayerKind::Linear:
        gemm_task(TaskRole::LinearGemm, l.out_channels, l.input.positions(), l.input.channels, ResourceKind::LinearAdd,
                  0, {});
        break;
      case LayerKind::AttentionBlock: add_attention(l); break;
    }
    span_->task_end = static_cast<std::uint32_t>(s_.tasks.size());
  }

  void add_group_norm(const LayerSpec& l) {
    const std::uint64_t e = l.input.elements(), c = l.input.channels;
    std::uint32_t stats = open_task(TaskRole::NormStats);
    event(stats, EcuOp::Add, 2 * e + 2 * c);  // sums, sums of squares, per-channel scale and shift
    event(stats, EcuOp::LutLn, l.groups);     // 1/sqrt(var + eps) as exp(-ln(.)/2)
    event(stats, EcuOp::LutExp, l.groups);
    close_task(stats);

    // One element per waveguide row, scaled by that row's broadband MR; the
    // shift is added digitally after the ADC.
    std::uint32_t id = open_task(TaskRole::NormAffine, {stats});
    s_.tasks[id].elements = e;
    std::uint64_t reads = 0;
    for (std::uint64_t begin = 0; begin < e; begin += cfg_.K) {
      TilePass p;
      p.task = id;
      p.layer = layer_;
      p.block = conv_block();
      p.row_begin = static_cast<std::uint32_t>(begin);
      p.rows_used = static_cast<std::uint32_t>(std::min<std::uint64_t>(cfg_.K, e - begin));
      p.cols_used = 1;
      p.lane_ops = p.rows_used;
      gemm_phases(p, 2 * std::uint64_t{p.rows_used});
      reads += 2 * p.rows_used;
      s_.passes.push_back(p);
    }
    event(id, EcuOp::Add, e);
    event(id, EcuOp::BufferAccess, reads + e);
    close_task(id);
  }

  void add_attention(const LayerSpec& l) {
    const std::size_t S = l.input.positions(), D = l.input.channels, dk = l.d_k, dv = l.d_v();
    std::vector<std::uint32_t> applies;
    for (std::uint32_t j = 0; j < l.heads; ++j) {
      const auto block = static_cast<std::uint16_t>(j % cfg_.H);
      std::uint32_t q = gemm_task(TaskRole::AttnQuery, S, dk, D, ResourceKind::HeadUpper, block, {}, j);
      std::uint32_t qk = gemm_task(TaskRole::AttnQueryKey, S, D, dk, ResourceKind::HeadUpper, block, {q}, j);
      std::uint32_t logits = gemm_task(TaskRole::AttnLogits, S, S, D, ResourceKind::HeadUpper, block, {qk}, j);
      std::uint32_t value = gemm_task(TaskRole::AttnValue, S, dv, D, ResourceKind::HeadValue, block, {}, j);

      std::uint32_t sm = open_task(TaskRole::Softmax, {logits}, j);
      for (std::uint32_t r = 0; r < S; ++r) {
        event(sm, EcuOp::Compare, S, r, 1);
        event(sm, EcuOp::Subtract, S, r, 2);
        event(sm, EcuOp::LutExp, S, r, 2);
        event(sm, EcuOp::Add, S, r, 2);
        event(sm, EcuOp::LutLn, 1, r, 2);
        event(sm, EcuOp::Subtract, S, r, 3);
        event(sm, EcuOp::LutExp, S, r, 4);
      }
      close_task(sm);
      applies.push_back(gemm_task(TaskRole::AttnApply, S, dv, S, ResourceKind::HeadApply, block, {sm, value}, j));
    }
    std::uint32_t cat = open_task(TaskRole::AttnConcat, applies);
    event(cat, EcuOp::BufferAccess, 2 * S * l.heads * dv);
    close_task(cat);
    std::uint32_t out = gemm_task(TaskRole::AttnOutput, S, D, l.heads * dv, ResourceKind::LinearAdd, 0, {cat});
    lane_task(TaskRole::AttnResidual, S * D, ResourceKind::AddLane, {out});
  }

  const WorkloadGraph& graph_;
  const ArchConfig& cfg_;
  const OptimizationSet& opts_;
  const DeviceProfile& prof_;
  const EcuConstants& ecu_;
  Schedule s_;
  LayerSpan* span_ = nullptr;
  std::uint32_t layer_ = 0;
  std::size_t conv_rr_ = 0;
  std::uint64_t thermal_period_ = 0, tuned_passes_ = 0;
};

WorkloadGraph single_layer_graph(const LayerSpec& layer) {
  WorkloadGraph g;
  g.name = layer.name.empty() ? "layer" : layer.name;
  g.timesteps = 1;
  g.input = layer.input;
  g.layers = {layer};
  g.layers[0].skip_from.reset();
  validate(g);
  return g;
}

}  // namespace

Schedule apply_dac_sharing(Schedule schedule, std::size_t sharing) {
  if (sharing == 0) throw DomainError("dac_sharing must be >= 1");
  if (sharing == 1) return schedule;
  for (auto& p : schedule.passes) {
    if (p.cols_used < 2) continue;
    const double stretch = static_cast<double>(std::min<std::size_t>(sharing, p.cols_used));
    p.phase(Phase::DacConvert).latency_s *= stretch;
  }
  schedule.dac_sharing = sharing;
  return schedule;
}

Schedule apply_pipelining(Schedule schedule, bool enabled) {
  retime(schedule, enabled);
  schedule.opts.pipelining = enabled;
  return schedule;
}

Schedule compile(const WorkloadGraph& graph, const ArchConfig& cfg, const OptimizationSet& opts,
                 const DeviceProfile& profile, const EcuConstants& ecu) {
  cfg.validate();
  profile.validate();
  auto wg = check_waveguide_constraint(cfg);
  if (!wg.feasible) throw InfeasibleConfig("architecture [" + cfg.tuple_string() + "] rejected: " + wg.offending);
  WorkloadGraph g = graph;
  validate(g);
  Schedule s = Compiler(g, cfg, opts, profile, ecu).run();
  if (opts.dac_sharing) s = apply_dac_sharing(std::move(s), cfg.dac_sharing);
  return apply_pipelining(std::move(s), opts.pipelining);
}

std::vector<TilePass> schedule_conv(const LayerSpec& layer, const ArchConfig& cfg, bool sparsity,
                                    const DeviceProfile& profile) {
  if (layer.kind != LayerKind::Conv && layer.kind != LayerKind::ConvTranspose) {
    throw DomainError(std::string("schedule_conv: layer kind ") + layer_kind_name(layer.kind) + " is not a convolution");
  }
  OptimizationSet o;
  o.sparsity = sparsity;
  return compile(single_layer_graph(layer), cfg, o, profile).passes;
}

Schedule schedule_attention_head(const LayerSpec& layer, const ArchConfig& cfg, const DeviceProfile& profile) {
  if (layer.kind != LayerKind::AttentionBlock) {
    throw DomainError(std::string("schedule_attention_head: layer kind ") + layer_kind_name(layer.kind) +
                      " is not attention");
  }
  OptimizationSet o;
  o.pipelining = true;
  return compile(single_layer_graph(layer), cfg, o, profile);
}

std::vector<TilePass> schedule_activation(const LayerSpec& layer, const ArchConfig& cfg, const DeviceProfile& profile) {
  if (layer.kind != LayerKind::Swish) {
    throw DomainError(std::string("schedule_activation: layer kind ") + layer_kind_name(layer.kind) + " is not swish");
  }
  return compile(single_layer_graph(layer), cfg, {}, profile).passes;
}

}  // namespace difflight
