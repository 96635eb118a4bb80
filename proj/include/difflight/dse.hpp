#pragma once

#include <iosfwd>
#include <string>
#include <string_view>
#include <vector>

#include "difflight/cost.hpp"

namespace difflight {

enum class Objective { GopsPerEpb, Gops, InverseEpb };
Objective parse_objective(std::string_view text);
const char* objective_name(Objective o);

// Candidate values per architecture parameter; the grid is their product.
struct DseSpace {
  std::vector<std::size_t> Y{4}, N{12}, K{3}, H{6}, L{6}, M{3};
  std::vector<std::size_t> dac_sharing{2};
  Objective objective = Objective::GopsPerEpb;
  OptimizationSet opts = OptimizationSet::all();
  ArchConfig base;  // waveguide limit and bit width
  std::vector<WorkloadGraph> workloads;

  std::vector<ArchConfig> grid() const;
};

// Keys dse.y, dse.n, dse.k, dse.h, dse.l, dse.m, dse.dac_sharing (comma lists),
// dse.objective, dse.opts and dse.workloads (preset names).
DseSpace load_dse_space(const ConfigFile& cfg);

struct DsePoint {
  ArchConfig cfg;
  bool feasible = false;
  std::string reason;  // why the point was excluded
  double gops = 0.0;   // mean over the workload set
  double epb_j_per_bit = 0.0;
  double objective = 0.0;
};

struct DseResult {
  std::vector<DsePoint> ranked;    // feasible points, best first
  std::vector<DsePoint> excluded;  // infeasible points with reasons
  std::vector<DsePoint> frontier;  // non-dominated feasible points
};

DsePoint evaluate_point(const ArchConfig& cfg, const DseSpace& space, const DeviceProfile& profile,
                        const LossBudget& budget, const CostParams& params);

// Evaluates every grid point (in parallel) and ranks by objective, then GOPS
// descending, EPB ascending, then the configuration tuple. Throws
// InfeasibleConfig when no point survives.
DseResult explore(const DseSpace& space, const DeviceProfile& profile = {}, const LossBudget& budget = {},
                  const CostParams& params = {});
DseResult explore_points(const std::vector<ArchConfig>& points, const DseSpace& space, const DeviceProfile& profile = {},
                         const LossBudget& budget = {}, const CostParams& params = {});

// a is at least as good on both axes and strictly better on one.
bool dominates(const DsePoint& a, const DsePoint& b);

// Non-dominated set under (max GOPS, min EPB), ordered by GOPS descending.
std::vector<DsePoint> report_frontier(const std::vector<DsePoint>& results);

inline constexpr std::string_view kDseHeader =
    "rank,Y,N,K,H,L,M,dac_sharing,feasible,gops,epb_j_per_bit,objective,reason";

void write_dse_csv(std::ostream& out, const std::vector<DsePoint>& ranked, const std::vector<DsePoint>& excluded);
void write_frontier_csv(std::ostream& out, const std::vector<DsePoint>& frontier);

}  // namespace difflight
