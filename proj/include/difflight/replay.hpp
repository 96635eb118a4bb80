#pragma once

#include <cstdint>
#include <vector>

#include "difflight/schedule.hpp"
#include "difflight/tensor.hpp"
#include "difflight/workload.hpp"

namespace difflight {

// Functional execution of a compiled schedule: every pass is evaluated on its
// own operand tile (signed products split over the positive and negative
// arms), partial sums accumulate as the ECU would, and element-wise passes use
// their optical semantics. Throws std::logic_error if any MAC is skipped or
// computed twice.
struct ReplayResult {
  std::vector<Tensor> layer_outputs;
  std::uint64_t replayed_macs = 0;

  const Tensor& output() const { return layer_outputs.back(); }
};

ReplayResult replay(const Schedule& schedule, const WorkloadGraph& graph, const std::vector<LayerWeights>& weights,
                    const Tensor& input);

struct VerifyResult {
  double max_relative_error = 0.0;  // worst layer
  double output_relative_error = 0.0;
  std::size_t worst_layer = 0;
};

// Replays `schedule` with random weights and input drawn from `seed` and
// compares every layer against direct reference execution.
VerifyResult verify_schedule(const Schedule& schedule, const WorkloadGraph& graph, std::uint64_t seed);

}  // namespace difflight
