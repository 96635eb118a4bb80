#include "difflight/dse.hpp"

#include <algorithm>
#include <charconv>
#include <ostream>
#include <tuple>

#include "difflight/error.hpp"
#include "difflight/units.hpp"

namespace difflight {

Objective parse_objective(std::string_view text) {
  if (text == "gops/epb" || text == "gops_per_epb") return Objective::GopsPerEpb;
  if (text == "gops") return Objective::Gops;
  if (text == "1/epb" || text == "inverse_epb") return Objective::InverseEpb;
  throw SchemaError("unknown DSE objective '" + std::string(text) + "' (expected gops/epb, gops or 1/epb)");
}

const char* objective_name(Objective o) {
  switch (o) {
    case Objective::GopsPerEpb: return "gops/epb";
    case Objective::Gops: return "gops";
    case Objective::InverseEpb: return "1/epb";
  }
  return "?";
}

std::vector<ArchConfig> DseSpace::grid() const {
  std::vector<ArchConfig> out;
  for (auto y : Y)
    for (auto n : N)
      for (auto k : K)
        for (auto h : H)
          for (auto l : L)
            for (auto m : M)
              for (auto s : dac_sharing) {
                ArchConfig c = base;
                c.Y = y, c.N = n, c.K = k, c.H = h, c.L = l, c.M = m, c.dac_sharing = s;
                out.push_back(c);
              }
  return out;
}

namespace {

std::vector<std::size_t> size_list(const ConfigFile& cfg, std::string_view key, std::vector<std::size_t> fallback) {
  auto v = cfg.get(key);
  if (!v) return fallback;
  cfg.mark_used(key);
  std::vector<std::size_t> out;
  for (const auto& item : ConfigFile::split_list(*v)) {
    std::size_t x = 0;
    auto [p, ec] = std::from_chars(item.data(), item.data() + item.size(), x);
    if (ec != std::errc() || p != item.data() + item.size() || x == 0) {
      throw SchemaError(std::string(key) + ": expected positive integers, got '" + item + "'");
    }
    out.push_back(x);
  }
  if (out.empty()) throw SchemaError(std::string(key) + ": list must not be empty");
  return out;
}

auto tuple_key(const ArchConfig& c) { return std::make_tuple(c.Y, c.N, c.K, c.H, c.L, c.M, c.dac_sharing); }

double objective_value(Objective o, double gops, double epb) {
  switch (o) {
    case Objective::GopsPerEpb: return epb > 0.0 ? gops / epb : 0.0;
    case Objective::Gops: return gops;
    case Objective::InverseEpb: return epb > 0.0 ? 1.0 / epb : 0.0;
  }
  return 0.0;
}

}  // namespace

DseSpace load_dse_space(const ConfigFile& cfg) {
  DseSpace s;
  s.Y = size_list(cfg, "dse.y", s.Y);
  s.N = size_list(cfg, "dse.n", s.N);
  s.K = size_list(cfg, "dse.k", s.K);
  s.H = size_list(cfg, "dse.h", s.H);
  s.L = size_list(cfg, "dse.l", s.L);
  s.M = size_list(cfg, "dse.m", s.M);
  s.dac_sharing = size_list(cfg, "dse.dac_sharing", s.dac_sharing);
  if (auto v = cfg.get("dse.objective")) {
    s.objective = parse_objective(*v);
    cfg.mark_used("dse.objective");
  }
  if (auto v = cfg.get("dse.opts")) {
    s.opts = parse_optimizations(*v);
    cfg.mark_used("dse.opts");
  }
  std::vector<std::string> names = preset_names();
  if (auto v = cfg.get("dse.workloads")) {
    names = ConfigFile::split_list(*v);
    cfg.mark_used("dse.workloads");
  }
  for (const auto& n : names) s.workloads.push_back(preset(n));
  return s;
}

DsePoint evaluate_point(const ArchConfig& cfg, const DseSpace& space, const DeviceProfile& profile,
                        const LossBudget& budget, const CostParams& params) {
  DsePoint p;
  p.cfg = cfg;
  try {
    cfg.validate();
    auto wg = check_waveguide_constraint(cfg);
    if (!wg.feasible) {
      p.reason = wg.offending;
      return p;
    }
    for (const auto& link : check_links(cfg, profile, budget)) {
      if (!link.feasible) {
        p.reason = "link budget: " + link.path + " short by " + units::format_double(link.shortfall_db) + " dB";
        return p;
      }
    }
    if (space.workloads.empty()) throw DomainError("DSE workload set is empty");
    double gops = 0.0, epb = 0.0;
    for (const auto& w : space.workloads) {
      CostReport r = aggregate(compile(w, cfg, space.opts, profile, params.ecu), profile, budget, params);
      gops += r.gops;
      epb += r.epb_j_per_bit;
    }
    const double n = static_cast<double>(space.workloads.size());
    p.gops = gops / n;
    p.epb_j_per_bit = epb / n;
    p.objective = objective_value(space.objective, p.gops, p.epb_j_per_bit);
    p.feasible = true;
  } catch (const InfeasibleConfig& e) {
    p.reason = e.what();
  } catch (const DomainError& e) {
    p.reason = e.what();
  }
  return p;
}

bool dominates(const DsePoint& a, const DsePoint& b) {
  return a.gops >= b.gops && a.epb_j_per_bit <= b.epb_j_per_bit &&
         (a.gops > b.gops || a.epb_j_per_bit < b.epb_j_per_bit);
}

std::vector<DsePoint> report_frontier(const std::vector<DsePoint>& results) {
  if (results.empty()) throw DomainError("report_frontier: no results");
  std::vector<DsePoint> sorted = results;
  // GOPS descending, EPB ascending: a point is dominated only by points before it.
  std::sort(sorted.begin(), sorted.end(), [](const DsePoint& a, const DsePoint& b) {
    if (a.gops != b.gops) return a.gops > b.gops;
    if (a.epb_j_per_bit != b.epb_j_per_bit) return a.epb_j_per_bit < b.epb_j_per_bit;
    return tuple_key(a.cfg) < tuple_key(b.cfg);
  });
  std::vector<DsePoint> frontier;
  for (const auto& p : sorted) {
    bool dominated = std::any_of(frontier.begin(), frontier.end(), [&](const DsePoint& f) { return dominates(f, p); });
    if (!dominated) frontier.push_back(p);
  }
  return frontier;
}

DseResult explore_points(const std::vector<ArchConfig>& points, const DseSpace& space, const DeviceProfile& profile,
                         const LossBudget& budget, const CostParams& params) {
  if (points.empty()) throw DomainError("DSE space is empty");
  std::vector<DsePoint> results(points.size());
  const auto n = static_cast<std::ptrdiff_t>(points.size());
#pragma omp parallel for schedule(dynamic)
  for (std::ptrdiff_t i = 0; i < n; ++i) results[i] = evaluate_point(points[i], space, profile, budget, params);

  DseResult out;
  for (auto& p : results) (p.feasible ? out.ranked : out.excluded).push_back(std::move(p));
  std::sort(out.ranked.begin(), out.ranked.end(), [](const DsePoint& a, const DsePoint& b) {
    if (a.objective != b.objective) return a.objective > b.objective;
    if (a.gops != b.gops) return a.gops > b.gops;
    if (a.epb_j_per_bit != b.epb_j_per_bit) return a.epb_j_per_bit < b.epb_j_per_bit;
    return tuple_key(a.cfg) < tuple_key(b.cfg);
  });
  std::sort(out.excluded.begin(), out.excluded.end(),
            [](const DsePoint& a, const DsePoint& b) { return tuple_key(a.cfg) < tuple_key(b.cfg); });
  if (out.ranked.empty()) {
    std::string why = out.excluded.front().reason;
    throw InfeasibleConfig("every DSE point is infeasible; first exclusion [" + out.excluded.front().cfg.tuple_string() +
                           "]: " + why);
  }
  out.frontier = report_frontier(out.ranked);
  return out;
}

DseResult explore(const DseSpace& space, const DeviceProfile& profile, const LossBudget& budget,
                  const CostParams& params) {
  return explore_points(space.grid(), space, profile, budget, params);
}

namespace {

void point_row(std::ostream& out, std::size_t rank, const DsePoint& p) {
  using units::format_double;
  const auto& c = p.cfg;
  out << rank << ',' << c.Y << ',' << c.N << ',' << c.K << ',' << c.H << ',' << c.L << ',' << c.M << ','
      << c.dac_sharing << ',' << (p.feasible ? "true" : "false") << ',';
  if (p.feasible) out << format_double(p.gops) << ',' << format_double(p.epb_j_per_bit) << ',' << format_double(p.objective);
  else out << ",,";
  std::string reason = p.reason;
  std::replace(reason.begin(), reason.end(), ',', ';');
  out << ',' << reason << '\n';
}

}  // namespace

void write_dse_csv(std::ostream& out, const std::vector<DsePoint>& ranked, const std::vector<DsePoint>& excluded) {
  out << kDseHeader << '\n';
  std::size_t rank = 0;
  for (const auto& p : ranked) point_row(out, ++rank, p);
  for (const auto& p : excluded) point_row(out, 0, p);
}

void write_frontier_csv(std::ostream& out, const std::vector<DsePoint>& frontier) {
  out << kDseHeader << '\n';
  std::size_t rank = 0;
  for (const auto& p : frontier) point_row(out, ++rank, p);
}

}  // namespace difflight
