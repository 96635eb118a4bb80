#include <gtest/gtest.h>

#include <algorithm>
#include <map>
#include <sstream>

#include "difflight/error.hpp"
#include "difflight/replay.hpp"
#include "difflight/schedule.hpp"
#include "oracles.hpp"

using namespace difflight;
using nlohmann::json;

namespace {

WorkloadGraph graph_of(FeatureShape in, json layers, std::size_t T = 1) {
  return load_workload(json{{"name", "unit"},
                            {"timesteps", T},
                            {"input", {{"channels", in.channels}, {"height", in.height}, {"width", in.width}}},
                            {"layers", std::move(layers)}});
}

std::size_t ceil_div(std::size_t a, std::size_t b) { return (a + b - 1) / b; }

std::string trace_of(const Schedule& s) {
  std::ostringstream out;
  write_trace(out, s);
  return out.str();
}

const Task& task_with(const Schedule& s, TaskRole role) {
  return *std::find_if(s.tasks.begin(), s.tasks.end(), [&](const Task& t) { return t.role == role; });
}

double task_first_start(const Schedule& s, const Task& t) {
  double m = 1e300;
  for (auto i = t.pass_begin; i < t.pass_end; ++i) m = std::min(m, s.passes[i].start_s);
  return m;
}

}  // namespace

TEST(OptimizationSet, ParseAndLabel) {
  EXPECT_EQ(parse_optimizations("none"), OptimizationSet::none());
  EXPECT_EQ(parse_optimizations("all"), OptimizationSet::all());
  auto two = parse_optimizations("sparsity,dacshare");
  EXPECT_TRUE(two.sparsity && two.dac_sharing && !two.pipelining);
  EXPECT_EQ(two.label(), "sparsity+dacshare");
  EXPECT_THROW(parse_optimizations("turbo"), SchemaError);
  auto combos = all_optimization_combinations();
  ASSERT_EQ(combos.size(), 8u);
  EXPECT_EQ(combos.front(), OptimizationSet::none());
  EXPECT_EQ(combos.back(), OptimizationSet::all());
}

TEST(TileGemm, WorkedExamples) {
  EXPECT_EQ(tile_gemm(3, 12, 3, 12).passes(), 1u);
  EXPECT_EQ(tile_gemm(6, 6, 3, 6).passes(), 2u);
  auto one = tile_gemm(1, 1, 3, 12);
  ASSERT_EQ(one.passes(), 1u);
  EXPECT_EQ(one.tiles[0].rows_used, 1u);
  EXPECT_EQ(one.tiles[0].cols_used, 1u);
  EXPECT_THROW(tile_gemm(0, 1, 1, 1), DomainError);
}

TEST(TileGemm, CoversEveryTermOnce) {
  for (std::size_t rows = 1; rows <= 13; rows += 3)
    for (std::size_t inner = 1; inner <= 40; inner += 7)
      for (std::size_t br : {1u, 3u, 4u})
        for (std::size_t bc : {1u, 6u, 12u}) {
          auto t = tile_gemm(rows, inner, br, bc);
          EXPECT_EQ(t.passes(), ceil_div(rows, br) * ceil_div(inner, bc));
          EXPECT_EQ(t.accumulations, rows * (ceil_div(inner, bc) - 1));
          std::uint64_t macs = 0;
          for (const auto& tile : t.tiles) {
            EXPECT_LE(tile.rows_used, br);
            EXPECT_LE(tile.cols_used, bc);
            EXPECT_EQ(tile.macs, std::uint64_t{tile.rows_used} * tile.cols_used);
            macs += tile.macs;
          }
          EXPECT_EQ(macs, rows * inner);
        }
}

TEST(TileGemm, RaggedGroupsFollowLongestDot) {
  auto t = tile_gemm_ragged({7, 7, 5, 3, 1}, 2, 3);
  EXPECT_EQ(t.passes(), 3u + 2u + 1u);
  std::uint64_t macs = 0;
  for (const auto& tile : t.tiles) macs += tile.macs;
  EXPECT_EQ(macs, 7u + 7u + 5u + 3u + 1u);
  EXPECT_EQ(t.accumulations, 2u + 2u + 1u + 0u + 0u);
  EXPECT_THROW(tile_gemm_ragged({1, 3}, 2, 3), DomainError);
}

TEST(ScheduleConv, SparsityOnlyAffectsStridedTranspose) {
  ArchConfig cfg;
  json s1 = {{{"kind", "conv_transpose"}, {"out_channels", 4}, {"kernel", 3}, {"stride", 1}, {"padding", 1}}};
  json s2 = {{{"kind", "conv_transpose"}, {"out_channels", 4}, {"kernel", 4}, {"stride", 2}, {"padding", 1}}};
  json conv = {{{"kind", "conv"}, {"out_channels", 4}, {"kernel", 3}, {"stride", 2}, {"padding", 1}}};
  auto l1 = graph_of({6, 5, 5}, s1).layers[0];
  auto l2 = graph_of({6, 5, 5}, s2).layers[0];
  auto lc = graph_of({6, 8, 8}, conv).layers[0];
  EXPECT_EQ(schedule_conv(l1, cfg, true).size(), schedule_conv(l1, cfg, false).size());
  EXPECT_LT(schedule_conv(l2, cfg, true).size(), schedule_conv(l2, cfg, false).size());
  EXPECT_EQ(schedule_conv(lc, cfg, true).size(), schedule_conv(lc, cfg, false).size());
  EXPECT_THROW(schedule_conv(graph_of({4, 2, 2}, {{{"kind", "swish"}}}).layers[0], cfg, true), DomainError);
}

TEST(ScheduleConv, SparseMacsMatchZeroCountOracle) {
  ArchConfig cfg;
  for (std::size_t k : {2u, 3u, 4u})
    for (std::size_t pad = 0; pad < k; ++pad) {
      json l = {{{"kind", "conv_transpose"}, {"out_channels", 3}, {"kernel", k}, {"stride", 2}, {"padding", pad}}};
      auto layer = graph_of({5, 4, 3}, l).layers[0];
      std::uint64_t dense = 0, sparse = 0;
      for (const auto& p : schedule_conv(layer, cfg, false)) dense += p.macs;
      for (const auto& p : schedule_conv(layer, cfg, true)) sparse += p.macs;
      EXPECT_EQ(dense, layer_macs(layer));
      EXPECT_EQ(dense - sparse, oracle::zero_operand_macs(5, 3, 4, 3, k, 2, pad));
    }
}

TEST(ScheduleConv, PassesRoundRobinOverConvBlocks) {
  ArchConfig cfg;
  auto layer = graph_of({8, 6, 6}, {{{"kind", "conv"}, {"out_channels", 8}, {"kernel", 3}, {"padding", 1}}}).layers[0];
  auto passes = schedule_conv(layer, cfg, false);
  std::vector<std::size_t> per_block(cfg.Y, 0);
  for (const auto& p : passes) {
    ASSERT_EQ(p.block.kind, ResourceKind::ConvBlock);
    ++per_block[p.block.index];
  }
  for (auto n : per_block) EXPECT_NEAR(static_cast<double>(n), passes.size() / double(cfg.Y), 1.0);
}

TEST(ScheduleAttention, PassCountsFollowTiling) {
  ArchConfig cfg;  // N = 12, L = 6, M = 3
  auto layer = graph_of({12, 1, 3}, {{{"kind", "attention"}, {"heads", 1}, {"d_k", 6}}}).layers[0];
  Schedule s = schedule_attention_head(layer, cfg);
  const std::size_t S = 3, D = 12, dk = 6, dv = 12;
  auto passes = [&](TaskRole r) {
    const Task& t = task_with(s, r);
    return static_cast<std::size_t>(t.pass_end - t.pass_begin);
  };
  EXPECT_EQ(passes(TaskRole::AttnQuery), ceil_div(S * dk, cfg.M) * ceil_div(D, cfg.L));
  EXPECT_EQ(passes(TaskRole::AttnQueryKey), ceil_div(S * D, cfg.M) * ceil_div(dk, cfg.L));
  EXPECT_EQ(passes(TaskRole::AttnLogits), ceil_div(S * S, cfg.M) * ceil_div(D, cfg.L));
  EXPECT_EQ(passes(TaskRole::AttnValue), ceil_div(S * dv, cfg.M) * ceil_div(D, cfg.N));
  EXPECT_EQ(passes(TaskRole::AttnApply), ceil_div(S * dv, cfg.M) * ceil_div(S, cfg.N));
  for (const auto& t : s.tasks)
    if (t.pass_end > t.pass_begin && t.gemm.rows > 0)
      EXPECT_EQ(t.pass_end - t.pass_begin, tile_gemm(t.gemm.dots(), t.gemm.inner, t.gemm.bank_rows, t.gemm.bank_cols).passes());
}

TEST(ScheduleAttention, ValuePathOverlapsUpperPath) {
  ArchConfig cfg;
  auto layer = graph_of({12, 2, 3}, {{{"kind", "attention"}, {"heads", 2}, {"d_k", 4}}}).layers[0];
  Schedule s = schedule_attention_head(layer, cfg);
  for (const auto& t : s.tasks) {
    if (t.role != TaskRole::AttnValue) continue;
    const Task* logits = nullptr;
    for (const auto& u : s.tasks)
      if (u.role == TaskRole::AttnLogits && u.head == t.head) logits = &u;
    ASSERT_NE(logits, nullptr);
    EXPECT_LT(task_first_start(s, t), logits->finish_s);
    EXPECT_EQ(s.passes[t.pass_begin].block.kind, ResourceKind::HeadValue);
    EXPECT_EQ(s.passes[t.pass_begin].block.index, t.head % cfg.H);
  }
}

TEST(ScheduleAttention, SoftmaxStagesOrderedPerRow) {
  ArchConfig cfg;
  auto layer = graph_of({8, 2, 2}, {{{"kind", "attention"}, {"heads", 1}, {"d_k", 4}}}).layers[0];
  Schedule s = schedule_attention_head(layer, cfg);
  const Task& sm = task_with(s, TaskRole::Softmax);
  ASSERT_GT(sm.event_end, sm.event_begin);
  std::map<std::uint32_t, double> compare_done;
  std::size_t subtracts = 0;
  for (auto i = sm.event_begin; i < sm.event_end; ++i) {
    const EcuEvent& e = s.events[i];
    if (e.op == EcuOp::Compare) compare_done[e.row] = e.finish_s;
    if (e.op == EcuOp::Subtract) {
      ASSERT_TRUE(compare_done.count(e.row));
      EXPECT_LE(compare_done[e.row], e.start_s);
      ++subtracts;
    }
  }
  EXPECT_EQ(compare_done.size(), 4u);
  EXPECT_GT(subtracts, 0u);
}

TEST(ScheduleActivation, LaneLatency) {
  EXPECT_NEAR(activation_lane_latency(DeviceProfile{}), 0.07e-9 + 0.3e-9 + 5.8e-12 + 20e-9 + 5.8e-12, 1e-21);
  EXPECT_NEAR(activation_lane_latency(DeviceProfile{}) * 1e9, 20.3816, 1e-9);
}

TEST(ScheduleActivation, PassesGrowWithLanes) {
  ArchConfig cfg;
  const std::size_t lanes = cfg.activation_lanes();
  for (std::size_t n : {1u, 35u, 36u, 37u, 100u, 360u}) {
    auto layer = graph_of({n, 1, 1}, {{{"kind", "swish"}}}).layers[0];
    auto passes = schedule_activation(layer, cfg);
    EXPECT_EQ(passes.size(), ceil_div(n, lanes)) << n;
    std::uint64_t lane_ops = 0;
    for (const auto& p : passes) lane_ops += p.lane_ops;
    EXPECT_EQ(lane_ops, n);
  }
}

TEST(ScheduleActivation, ReplayMatchesSwish) {
  WorkloadGraph g = graph_of({5, 4, 4}, {{{"kind", "swish"}}});
  for (const auto& opts : all_optimization_combinations())
    EXPECT_LE(verify_schedule(compile(g, ArchConfig{}, opts), g, 3).max_relative_error, 1e-10);
}

TEST(Pipelining, SinglePassUnchanged) {
  WorkloadGraph g = graph_of({1, 1, 1}, {{{"kind", "conv"}, {"out_channels", 1}, {"kernel", 1}}});
  Schedule serial = compile(g, ArchConfig{}, {});
  ASSERT_EQ(serial.passes.size(), 1u);
  Schedule piped = apply_pipelining(serial, true);
  EXPECT_DOUBLE_EQ(piped.timestep_latency_s, serial.timestep_latency_s);
  EXPECT_DOUBLE_EQ(piped.timestep_latency_s, serial.passes[0].latency());
}

TEST(Pipelining, TwoBlocksOverlap) {
  ArchConfig cfg;
  cfg.Y = 2;
  WorkloadGraph g = graph_of({4, 4, 4}, {{{"kind", "conv"}, {"out_channels", 6}, {"kernel", 3}, {"padding", 1}},
                                         {{"kind", "conv"}, {"out_channels", 6}, {"kernel", 3}, {"padding", 1}}});
  Schedule s = compile(g, cfg, parse_optimizations("pipeline"));
  EXPECT_LT(s.timestep_latency_s, serial_latency(s));
}

TEST(Pipelining, SingleBankLowerBound) {
  ArchConfig cfg;
  cfg.Y = 1;
  WorkloadGraph g = graph_of({12, 3, 3}, {{{"kind", "conv"}, {"out_channels", 5}, {"kernel", 3}, {"padding", 1}}});
  Schedule s = compile(g, cfg, parse_optimizations("pipeline"));
  double stage_a = 0.0, stage_b = 0.0;
  for (const auto& p : s.passes) {
    stage_a += p.phase(Phase::DacConvert).latency_s + p.phase(Phase::MrTune).latency_s;
    stage_b += p.phase(Phase::OpticalPropagate).latency_s + p.phase(Phase::PdDetect).latency_s +
               p.phase(Phase::AdcConvert).latency_s;
  }
  EXPECT_GE(s.timestep_latency_s, std::max(stage_a, stage_b));
  EXPECT_LE(s.timestep_latency_s, serial_latency(s));
}

TEST(DacSharing, OneIsIdentity) {
  Schedule s = compile(preset("ddpm-toy"), ArchConfig{}, {});
  EXPECT_EQ(trace_of(apply_dac_sharing(s, 1)), trace_of(s));
  EXPECT_THROW(apply_dac_sharing(s, 0), DomainError);
}

TEST(DacSharing, StretchesConversionOfSharedColumns) {
  Schedule s = compile(preset("ddpm-toy"), ArchConfig{}, {});
  Schedule shared = apply_dac_sharing(s, 2);
  EXPECT_EQ(shared.dac_sharing, 2u);
  for (std::size_t i = 0; i < s.passes.size(); ++i) {
    const auto& a = s.passes[i].phase(Phase::DacConvert);
    const auto& b = shared.passes[i].phase(Phase::DacConvert);
    const double factor = s.passes[i].cols_used >= 2 ? 2.0 : 1.0;
    EXPECT_DOUBLE_EQ(b.latency_s, factor * a.latency_s);
    EXPECT_EQ(b.energy_j, a.energy_j);
    EXPECT_EQ(shared.passes[i].phase(Phase::MrTune).latency_s, s.passes[i].phase(Phase::MrTune).latency_s);
  }
}

TEST(Compile, EveryMacCoveredWithoutSparsity) {
  WorkloadGraph g = preset("ddpm-toy");
  Schedule s = compile(g, ArchConfig{}, {});
  std::uint64_t macs = 0;
  for (const auto& p : s.passes) macs += p.macs;
  EXPECT_EQ(macs, count_macs(g).per_timestep);
  EXPECT_EQ(s.executed_macs(), s.dense_macs());
  auto replayed = replay(s, g, make_weights(g, 1), Tensor({3, 16, 16}, 0.5));
  EXPECT_EQ(replayed.replayed_macs, macs);
}

TEST(Compile, SparsityConservesMacs) {
  for (const auto& name : preset_names()) {
    WorkloadGraph g = preset(name);
    Schedule s = compile(g, ArchConfig{}, parse_optimizations("sparsity"));
    std::uint64_t eliminated = 0;
    for (const auto& l : s.layers) {
      if (l.kind != LayerKind::ConvTranspose) continue;
      const LayerSpec& spec = *std::find_if(g.layers.begin(), g.layers.end(), [&](auto& x) { return x.name == l.name; });
      eliminated += spec.stride >= 2 ? oracle::zero_operand_macs(spec.input.channels, spec.out_channels, spec.input.height,
                                                                 spec.input.width, spec.kernel, spec.stride, spec.padding)
                                     : 0;
    }
    std::uint64_t macs = 0;
    for (const auto& p : s.passes) macs += p.macs;
    EXPECT_EQ(macs, count_macs(g).per_timestep - eliminated) << name;
    EXPECT_GT(eliminated, 0u);
  }
}

TEST(Compile, PassesFitTheirBanks) {
  ArchConfig cfg{2, 8, 2, 3, 4, 2};
  for (const auto& name : preset_names()) {
    Schedule s = compile(preset(name), cfg, OptimizationSet::all());
    for (const auto& p : s.passes) {
      auto [rows, cols] = resource_capacity(p.block.kind, cfg);
      EXPECT_LE(p.rows_used, rows);
      EXPECT_LE(p.cols_used, cols);
      EXPECT_LE(p.finish_s, s.timestep_latency_s * (1 + 1e-12));
    }
  }
}

TEST(Compile, RejectsWaveguideOverflow) {
  ArchConfig cfg;
  cfg.N = 37;
  try {
    compile(preset("ddpm-toy"), cfg, {});
    FAIL() << "expected InfeasibleConfig";
  } catch (const InfeasibleConfig& e) {
    EXPECT_NE(std::string(e.what()).find("limit 36"), std::string::npos) << e.what();
  }
  cfg.N = 36;
  EXPECT_NO_THROW(compile(preset("ddpm-toy"), cfg, {}));
}

TEST(Compile, TimestepsRunBackToBack) {
  WorkloadGraph g = preset("ldm-toy");
  g.timesteps = 1;
  Schedule one = compile(g, ArchConfig{}, OptimizationSet::all());
  g.timesteps = 2;
  Schedule two = compile(g, ArchConfig{}, OptimizationSet::all());
  EXPECT_DOUBLE_EQ(two.latency_s(), 2.0 * one.latency_s());
}

TEST(Compile, OptimizationsMonotoneOnPresets) {
  for (const auto& name : preset_names()) {
    WorkloadGraph g = preset(name);
    for (const auto& base : all_optimization_combinations()) {
      Schedule s = compile(g, ArchConfig{}, base);
      OptimizationSet with = base;
      with.pipelining = true;
      EXPECT_LE(compile(g, ArchConfig{}, with).timestep_latency_s, s.timestep_latency_s * (1 + 1e-12));
      with = base;
      with.sparsity = true;
      EXPECT_LE(compile(g, ArchConfig{}, with).passes.size(), s.passes.size());
    }
  }
}

TEST(Compile, Deterministic) {
  for (const auto& name : preset_names())
    EXPECT_EQ(trace_of(compile(preset(name), ArchConfig{}, OptimizationSet::all())),
              trace_of(compile(preset(name), ArchConfig{}, OptimizationSet::all())));
}

TEST(Compile, ReplayMatchesDirectExecution) {
  WorkloadGraph g = preset("sdm-toy");
  auto v = verify_schedule(compile(g, ArchConfig{}, OptimizationSet::all()), g, 11);
  EXPECT_LE(v.max_relative_error, 1e-8);
  EXPECT_LE(v.output_relative_error, 1e-8);
}

TEST(Trace, HeaderAndRecordCount) {
  Schedule s = compile(preset("ddpm-toy"), ArchConfig{}, OptimizationSet::all());
  std::string text = trace_of(s);
  EXPECT_EQ(text.substr(0, text.find('\n')), kTraceHeader);
  const auto lines = static_cast<std::size_t>(std::count(text.begin(), text.end(), '\n'));
  EXPECT_EQ(lines, 1 + s.passes.size() + s.events.size());
  const auto columns = static_cast<std::size_t>(std::count(kTraceHeader.begin(), kTraceHeader.end(), ',')) + 1;
  std::istringstream in(text);
  std::string line;
  while (std::getline(in, line)) EXPECT_EQ(static_cast<std::size_t>(std::count(line.begin(), line.end(), ',')) + 1, columns);
}
