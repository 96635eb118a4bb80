#include "difflight/cost.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <ostream>

#include "difflight/error.hpp"
#include "difflight/units.hpp"

namespace difflight {

using units::format_double;

const char* energy_class_name(EnergyClass c) {
  switch (c) {
    case EnergyClass::Laser: return "laser";
    case EnergyClass::Tuning: return "tuning";
    case EnergyClass::Dac: return "dac";
    case EnergyClass::Adc: return "adc";
    case EnergyClass::Photodetector: return "photodetector";
    case EnergyClass::Soa: return "soa";
    case EnergyClass::EcuDigital: return "ecu";
    case EnergyClass::Buffer: return "buffer";
  }
  return "?";
}

CostParams load_cost_params(const ConfigFile& cfg, CostParams base) {
  using units::Dimension;
  if (auto v = cfg.get("cost.dac_static_fraction")) {
    base.dac_static_fraction = units::parse_as(*v, Dimension::Dimensionless, "cost.dac_static_fraction");
    cfg.mark_used("cost.dac_static_fraction");
  }
  if (auto v = cfg.get("cost.always_on")) {
    if (*v != "true" && *v != "false") throw SchemaError("cost.always_on: expected true or false, got '" + *v + "'");
    base.always_on = *v == "true";
    cfg.mark_used("cost.always_on");
  }
  if (auto v = cfg.get("cost.buffer_access_energy")) {
    base.ecu.buffer_access_energy_j = units::parse_as(*v, Dimension::Energy, "cost.buffer_access_energy");
    cfg.mark_used("cost.buffer_access_energy");
  }
  if (auto v = cfg.get("cost.lut_entries")) {
    base.ecu.lut_entries = static_cast<std::size_t>(units::parse_as(*v, Dimension::Dimensionless, "cost.lut_entries"));
    cfg.mark_used("cost.lut_entries");
  }
  if (base.dac_static_fraction < 0.0 || base.dac_static_fraction > 1.0) {
    throw DomainError("cost.dac_static_fraction must lie in [0, 1]");
  }
  if (base.ecu.buffer_access_energy_j < 0.0) throw DomainError("cost.buffer_access_energy must be non-negative");
  return base;
}

double CostReport::breakdown_sum() const {
  double s = 0.0;
  for (double e : breakdown) s += e;
  return s;
}

namespace {

void add(EnergyBreakdown& b, EnergyClass c, double e) { b[static_cast<std::size_t>(c)] += e; }

// Dynamic energy of one pass split by component class.
void pass_breakdown(const TilePass& p, EnergyBreakdown& b, bool always_on) {
  const double prop = p.phase(Phase::OpticalPropagate).energy_j;
  add(b, EnergyClass::Laser, prop - p.soa_energy_j);
  add(b, EnergyClass::Tuning, p.phase(Phase::MrTune).energy_j);
  if (always_on) return;
  add(b, EnergyClass::Soa, p.soa_energy_j);
  add(b, EnergyClass::Dac, p.phase(Phase::DacConvert).energy_j);
  add(b, EnergyClass::Photodetector, p.phase(Phase::PdDetect).energy_j);
  add(b, EnergyClass::Adc, p.phase(Phase::AdcConvert).energy_j);
}

// Power drawn regardless of activity, per class.
EnergyBreakdown static_power(const Schedule& s, const DeviceProfile& prof, const CostParams& params) {
  EnergyBreakdown w{};
  const DeviceCounts inv = build_inventory(s.arch, s.dac_sharing).total;
  if (params.always_on) {
    add(w, EnergyClass::Dac, static_cast<double>(inv.dacs) * prof.dac8.power_w);
    add(w, EnergyClass::Adc, static_cast<double>(inv.adcs) * prof.adc8.power_w);
    add(w, EnergyClass::Photodetector, static_cast<double>(inv.photodetectors) * prof.photodetector.power_w);
    add(w, EnergyClass::Soa, static_cast<double>(inv.soas) * prof.soa.power_w);
  } else {
    add(w, EnergyClass::Dac, static_cast<double>(inv.dacs) * prof.dac8.power_w * params.dac_static_fraction);
  }
  return w;
}

double sum(const EnergyBreakdown& b) {
  double s = 0.0;
  for (double e : b) s += e;
  return s;
}

std::vector<ResourceId> all_resources(const ArchConfig& cfg) {
  std::vector<ResourceId> r;
  for (std::size_t i = 0; i < cfg.Y; ++i) r.push_back({ResourceKind::ConvBlock, static_cast<std::uint16_t>(i)});
  r.push_back({ResourceKind::ActivationBlock, 0});
  for (auto kind : {ResourceKind::HeadUpper, ResourceKind::HeadValue, ResourceKind::HeadApply})
    for (std::size_t i = 0; i < cfg.H; ++i) r.push_back({kind, static_cast<std::uint16_t>(i)});
  r.push_back({ResourceKind::LinearAdd, 0});
  r.push_back({ResourceKind::AddLane, 0});
  return r;
}

}  // namespace

std::vector<LinkCheck> check_links(const ArchConfig& cfg, const DeviceProfile& prof, const LossBudget& budget) {
  struct Group {
    const char* name;
    std::size_t rows, cols;
    int broadband;
  };
  const Group groups[] = {
      {"conv_block", cfg.K, cfg.N, 1},       {"attention_upper", cfg.M, cfg.L, 0},
      {"attention_value", cfg.M, cfg.N, 0},  {"attention_apply", cfg.M, cfg.N, 0},
      {"linear_add", cfg.M, cfg.L, 0},
  };
  std::vector<LinkCheck> out;
  const double vcsel_dbm = units::milliwatt_to_dbm(prof.vcsel.power_w * 1e3);
  for (const auto& g : groups) {
    // One VCSEL per wavelength is split over both arms of every row.
    const std::size_t arms = 2 * g.rows;
    LinkPath path;
    path.waveguide_cm = budget.path_length_cm;
    path.splitters = static_cast<int>(std::ceil(std::log2(static_cast<double>(arms))));
    path.through_mrs = static_cast<int>(2 * (g.cols - 1)) + g.broadband;
    path.modulating_mrs = 2;
    LinkCheck c;
    c.path = g.name;
    c.rows = g.rows;
    c.cols = g.cols;
    c.laser_dbm = vcsel_dbm - 10.0 * std::log10(static_cast<double>(arms));
    c.loss_db = link_loss(path, budget);
    auto v = check_link_feasible(c.laser_dbm, c.loss_db, budget.pd_sensitivity_dbm);
    c.received_dbm = v.received_dbm;
    c.feasible = v.feasible;
    c.shortfall_db = v.shortfall_db;
    out.push_back(c);
  }
  return out;
}

CostReport aggregate_layers(const Schedule& s, std::size_t begin, std::size_t end, const DeviceProfile& prof,
                            const LossBudget& budget, const CostParams& params) {
  if (begin > end || end > s.layers.size()) throw DomainError("aggregate_layers: layer range out of bounds");
  CostReport r;
  r.workload = s.workload;
  r.arch = s.arch.tuple_string();
  r.opts = s.opts.label();
  r.timesteps = s.timesteps;
  const double T = static_cast<double>(s.timesteps);

  const EnergyBreakdown static_w = static_power(s, prof, params);
  r.static_power_w = sum(static_w);

  std::map<std::pair<int, int>, double> busy;
  EnergyBreakdown step{};
  for (std::size_t li = begin; li < end; ++li) {
    const LayerSpan& span = s.layers[li];
    LayerCost lc;
    lc.name = span.name;
    lc.kind = span.kind;
    lc.block = span.block;
    lc.macs = span.macs;
    lc.dense_macs = span.dense_macs;
    lc.latency_s = span.finish_s - span.start_s;
    for (auto ti = span.task_begin; ti < span.task_end; ++ti) {
      const Task& t = s.tasks[ti];
      lc.passes += t.pass_end - t.pass_begin;
      for (auto pi = t.pass_begin; pi < t.pass_end; ++pi) {
        const TilePass& p = s.passes[pi];
        pass_breakdown(p, lc.breakdown, params.always_on);
        busy[{static_cast<int>(p.block.kind), p.block.index}] += p.latency();
      }
      for (auto ei = t.event_begin; ei < t.event_end; ++ei) {
        const EcuEvent& e = s.events[ei];
        add(lc.breakdown, e.op == EcuOp::BufferAccess ? EnergyClass::Buffer : EnergyClass::EcuDigital, e.energy_j);
      }
    }
    for (std::size_t c = 0; c < kEnergyClassCount; ++c) lc.breakdown[c] += static_w[c] * lc.latency_s;
    lc.energy_j = sum(lc.breakdown);
    for (std::size_t c = 0; c < kEnergyClassCount; ++c) step[c] += lc.breakdown[c];
    r.timestep_latency_s += lc.latency_s;
    r.passes += lc.passes;
    r.macs += lc.macs;
    r.dense_macs += lc.dense_macs;
    r.layers.push_back(std::move(lc));
  }

  for (std::size_t c = 0; c < kEnergyClassCount; ++c) r.breakdown[c] = step[c] * T;
  r.timestep_energy_j = sum(step);
  r.energy_j = r.breakdown_sum();
  r.latency_s = r.timestep_latency_s * T;
  r.macs *= s.timesteps;
  r.dense_macs *= s.timesteps;
  r.eliminated_macs = r.dense_macs - r.macs;
  if (r.latency_s > 0.0) r.gops = 2.0 * static_cast<double>(r.macs) / r.latency_s / 1e9;
  if (r.macs > 0) r.epb_j_per_bit = r.energy_j / static_cast<double>(r.processed_bits(s.arch.bit_width));

  for (const ResourceId& id : all_resources(s.arch)) {
    ResourceUtilization u;
    u.resource = resource_name(id);
    auto it = busy.find({static_cast<int>(id.kind), id.index});
    if (it != busy.end()) u.busy_s = it->second;
    if (r.timestep_latency_s > 0.0) u.fraction = std::min(1.0, u.busy_s / r.timestep_latency_s);
    r.utilization.push_back(u);
  }

  r.links = check_links(s.arch, prof, budget);
  for (const auto& l : r.links) r.links_feasible = r.links_feasible && l.feasible;
  return r;
}

CostReport aggregate(const Schedule& s, const DeviceProfile& prof, const LossBudget& budget, const CostParams& params) {
  return aggregate_layers(s, 0, s.layers.size(), prof, budget, params);
}

std::vector<AblationRow> ablation(const WorkloadGraph& graph, const ArchConfig& cfg, const DeviceProfile& prof,
                                  const LossBudget& budget, const CostParams& params) {
  const std::pair<const char*, OptimizationSet> variants[] = {
      {"baseline", OptimizationSet::none()},
      {"sparsity", {true, false, false}},
      {"pipeline", {false, true, false}},
      {"dacshare", {false, false, true}},
      {"all", OptimizationSet::all()},
  };
  std::vector<AblationRow> rows;
  double base = 0.0;
  for (const auto& [name, opts] : variants) {
    CostReport rep = aggregate(compile(graph, cfg, opts, prof, params.ecu), prof, budget, params);
    AblationRow row;
    row.workload = graph.name;
    row.variant = name;
    row.energy_j = rep.energy_j;
    row.latency_s = rep.latency_s;
    row.gops = rep.gops;
    row.epb_j_per_bit = rep.epb_j_per_bit;
    if (rows.empty()) base = rep.energy_j;
    row.normalized_energy = rows.empty() ? 1.0 : (base > 0.0 ? rep.energy_j / base : 0.0);
    rows.push_back(row);
  }
  return rows;
}

std::vector<ComparisonRow> compare_table(const std::vector<CostReport>& reports, std::size_t reference) {
  if (reports.empty()) throw DomainError("compare_table: at least one report is required");
  if (reference >= reports.size()) throw DomainError("compare_table: reference index out of range");
  const CostReport& ref = reports[reference];
  std::vector<ComparisonRow> rows;
  for (const auto& r : reports) {
    ComparisonRow row;
    row.label = r.workload + "@" + r.arch + "/" + r.opts;
    row.latency_s = r.latency_s;
    row.energy_j = r.energy_j;
    row.gops = r.gops;
    row.epb_j_per_bit = r.epb_j_per_bit;
    row.gops_ratio = ref.gops > 0.0 ? r.gops / ref.gops : 0.0;
    row.epb_ratio = ref.epb_j_per_bit > 0.0 ? r.epb_j_per_bit / ref.epb_j_per_bit : 0.0;
    rows.push_back(row);
  }
  std::stable_sort(rows.begin(), rows.end(), [](const auto& a, const auto& b) { return a.gops > b.gops; });
  for (std::size_t i = 0; i < rows.size(); ++i) rows[i].rank = i + 1;
  return rows;
}

void write_report_csv(std::ostream& out, const CostReport& r) {
  out << kReportHeader << '\n';
  auto row = [&](const char* scope, const std::string& name, const std::string& kind, const std::string& block,
                 std::uint64_t passes, std::uint64_t macs, std::uint64_t dense, double lat, double energy,
                 const EnergyBreakdown& b, double gops, double epb) {
    out << scope << ',' << name << ',' << kind << ',' << block << ',' << passes << ',' << macs << ',' << dense << ','
        << format_double(lat) << ',' << format_double(energy);
    for (double e : b) out << ',' << format_double(e);
    out << ',' << format_double(gops) << ',' << format_double(epb) << '\n';
  };
  for (const auto& l : r.layers) {
    double gops = l.latency_s > 0.0 ? 2.0 * static_cast<double>(l.macs) / l.latency_s / 1e9 : 0.0;
    row("layer", l.name, layer_kind_name(l.kind), l.block, l.passes, l.macs, l.dense_macs, l.latency_s, l.energy_j,
        l.breakdown, gops, 0.0);
  }
  EnergyBreakdown step{};
  const double T = static_cast<double>(r.timesteps);
  for (std::size_t c = 0; c < kEnergyClassCount; ++c) step[c] = r.breakdown[c] / T;
  row("timestep", r.workload, "", "", r.passes, r.macs / r.timesteps, r.dense_macs / r.timesteps, r.timestep_latency_s,
      r.timestep_energy_j, step, r.gops, r.epb_j_per_bit);
  row("total", r.workload, "", "", r.passes * r.timesteps, r.macs, r.dense_macs, r.latency_s, r.energy_j, r.breakdown,
      r.gops, r.epb_j_per_bit);
}

void write_ablation_csv(std::ostream& out, const std::vector<AblationRow>& rows, bool header) {
  if (header) out << kAblationHeader << '\n';
  for (const auto& r : rows) {
    out << r.workload << ',' << r.variant << ',' << format_double(r.energy_j) << ',' << format_double(r.normalized_energy)
        << ',' << format_double(r.latency_s) << ',' << format_double(r.gops) << ',' << format_double(r.epb_j_per_bit)
        << '\n';
  }
}

void write_compare_csv(std::ostream& out, const std::vector<ComparisonRow>& rows) {
  out << kCompareHeader << '\n';
  for (const auto& r : rows) {
    out << r.rank << ',' << r.label << ',' << format_double(r.latency_s) << ',' << format_double(r.energy_j) << ','
        << format_double(r.gops) << ',' << format_double(r.epb_j_per_bit) << ',' << format_double(r.gops_ratio) << ','
        << format_double(r.epb_ratio) << '\n';
  }
}

nlohmann::json to_json(const CostReport& r) {
  using nlohmann::json;
  json j;
  j["workload"] = r.workload;
  j["arch"] = r.arch;
  j["opts"] = r.opts;
  j["timesteps"] = r.timesteps;
  j["latency_s"] = r.latency_s;
  j["energy_j"] = r.energy_j;
  j["timestep_latency_s"] = r.timestep_latency_s;
  j["timestep_energy_j"] = r.timestep_energy_j;
  j["macs"] = r.macs;
  j["dense_macs"] = r.dense_macs;
  j["eliminated_macs"] = r.eliminated_macs;
  j["passes_per_timestep"] = r.passes;
  j["gops"] = r.gops;
  j["epb_j_per_bit"] = r.epb_j_per_bit;
  j["static_power_w"] = r.static_power_w;
  json b = json::object();
  for (std::size_t c = 0; c < kEnergyClassCount; ++c) b[energy_class_name(static_cast<EnergyClass>(c))] = r.breakdown[c];
  j["energy_breakdown_j"] = b;
  json layers = json::array();
  for (const auto& l : r.layers) {
    layers.push_back({{"name", l.name},
                      {"kind", layer_kind_name(l.kind)},
                      {"block", l.block},
                      {"passes", l.passes},
                      {"macs", l.macs},
                      {"dense_macs", l.dense_macs},
                      {"latency_s", l.latency_s},
                      {"energy_j", l.energy_j}});
  }
  j["layers"] = layers;
  json util = json::array();
  for (const auto& u : r.utilization) util.push_back({{"resource", u.resource}, {"busy_s", u.busy_s}, {"fraction", u.fraction}});
  j["utilization"] = util;
  json links = json::array();
  for (const auto& l : r.links) {
    links.push_back({{"path", l.path},
                     {"rows", l.rows},
                     {"cols", l.cols},
                     {"laser_dbm", l.laser_dbm},
                     {"loss_db", l.loss_db},
                     {"received_dbm", l.received_dbm},
                     {"feasible", l.feasible},
                     {"shortfall_db", l.shortfall_db}});
  }
  j["links"] = links;
  j["links_feasible"] = r.links_feasible;
  return j;
}

void print_summary(std::ostream& out, const CostReport& r) {
  out << r.workload << " on [" << r.arch << "] opts=" << r.opts << " T=" << r.timesteps << '\n';
  out << "  latency      " << format_double(r.latency_s) << " s\n";
  out << "  energy       " << format_double(r.energy_j) << " J\n";
  out << "  MACs         " << r.macs << " executed, " << r.eliminated_macs << " eliminated\n";
  out << "  passes/step  " << r.passes << '\n';
  out << "  GOPS         " << format_double(r.gops) << '\n';
  out << "  EPB          " << format_double(r.epb_j_per_bit) << " J/bit\n";
  for (std::size_t c = 0; c < kEnergyClassCount; ++c) {
    out << "    " << energy_class_name(static_cast<EnergyClass>(c)) << ' ' << format_double(r.breakdown[c]) << " J\n";
  }
  for (const auto& l : r.links) {
    if (!l.feasible) out << "  link " << l.path << " infeasible, shortfall " << format_double(l.shortfall_db) << " dB\n";
  }
}

}  // namespace difflight
