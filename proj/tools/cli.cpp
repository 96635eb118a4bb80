#include "cli.hpp"

#include <CLI11.hpp>

#include <algorithm>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <optional>
#include <ostream>
#include <stdexcept>

#include "difflight/cost.hpp"
#include "difflight/dse.hpp"
#include "difflight/error.hpp"
#include "difflight/replay.hpp"
#include "difflight/units.hpp"

namespace difflight::cli {

namespace fs = std::filesystem;

namespace {

constexpr double kVerifyTolerance = 1e-8;
constexpr std::string_view kVerifyHeader = "workload,opts,max_relative_error,output_relative_error,worst_layer,pass";

struct Options {
  std::vector<std::string> presets;
  std::vector<std::string> workloads;
  std::string arch;
  std::string opts;
  std::string profile;
  std::string space;
  std::string out = ".";
  bool trace = false;
  std::uint64_t seed = 1;
};

struct Environment {
  DeviceProfile profile;
  LossBudget budget;
  ArchConfig arch;
  CostParams params;
};

void warn_unknown(const ConfigFile& cfg, std::ostream& err) {
  for (const auto& k : cfg.unknown_keys()) err << "warning: " << cfg.origin() << ": unknown key '" << k << "'\n";
}

Environment load_environment(const Options& o, std::ostream& err) {
  Environment env;
  std::string path = o.profile;
  if (path.empty()) {
    if (const char* p = std::getenv("DIFFLIGHT_PROFILE"); p != nullptr) path = p;
  }
  if (!path.empty()) {
    ConfigFile cfg = ConfigFile::load(path);
    env.profile = load_device_profile(cfg);
    env.budget = load_loss_budget(cfg);
    env.arch = load_arch_config(cfg);
    env.params = load_cost_params(cfg);
    warn_unknown(cfg, err);
  }
  if (!o.arch.empty()) env.arch = parse_arch_tuple(o.arch, env.arch);
  return env;
}

std::vector<WorkloadGraph> workloads(const Options& o, bool default_all) {
  std::vector<WorkloadGraph> out;
  for (const auto& p : o.presets) out.push_back(preset(p));
  for (const auto& w : o.workloads) out.push_back(load_workload_file(w));
  if (out.empty() && default_all)
    for (const auto& p : preset_names()) out.push_back(preset(p));
  return out;
}

WorkloadGraph single_workload(const Options& o) {
  if (o.presets.size() + o.workloads.size() != 1) throw SchemaError("run needs exactly one of --preset or --workload");
  return workloads(o, false).front();
}

fs::path output_dir(const Options& o) {
  fs::path dir(o.out);
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec || !fs::is_directory(dir)) throw SchemaError("cannot create output directory '" + o.out + "'");
  return dir;
}

std::ofstream open_output(const fs::path& path) {
  std::ofstream f(path, std::ios::binary);
  if (!f) throw SchemaError("cannot write '" + path.string() + "'");
  return f;
}

int cmd_run(const Options& o, std::ostream& out, std::ostream& err) {
  Environment env = load_environment(o, err);
  WorkloadGraph graph = single_workload(o);
  OptimizationSet opts = parse_optimizations(o.opts.empty() ? "all" : o.opts);
  Schedule s = compile(graph, env.arch, opts, env.profile, env.params.ecu);
  CostReport r = aggregate(s, env.profile, env.budget, env.params);

  fs::path dir = output_dir(o);
  {
    auto f = open_output(dir / "report.csv");
    write_report_csv(f, r);
  }
  {
    auto f = open_output(dir / "report.json");
    f << to_json(r).dump(2) << '\n';
  }
  if (o.trace) {
    auto f = open_output(dir / "trace.csv");
    write_trace(f, s);
  }
  print_summary(out, r);
  if (!r.links_feasible) {
    for (const auto& l : r.links)
      if (!l.feasible) err << "error: link budget on " << l.path << " short by " << units::format_double(l.shortfall_db) << " dB\n";
    return kInfeasible;
  }
  return kOk;
}

int cmd_ablate(const Options& o, std::ostream& out, std::ostream& err) {
  Environment env = load_environment(o, err);
  fs::path dir = output_dir(o);
  auto f = open_output(dir / "ablation.csv");
  f << kAblationHeader << '\n';
  for (const auto& g : workloads(o, true)) {
    auto rows = ablation(g, env.arch, env.profile, env.budget, env.params);
    write_ablation_csv(f, rows, false);
    for (const auto& row : rows)
      out << row.workload << ' ' << row.variant << ' ' << units::format_double(row.normalized_energy) << '\n';
  }
  return kOk;
}

int cmd_dse(const Options& o, std::ostream& out, std::ostream& err) {
  Environment env = load_environment(o, err);
  DseSpace space;
  if (!o.space.empty()) {
    ConfigFile cfg = ConfigFile::load(o.space);
    space = load_dse_space(cfg);
    warn_unknown(cfg, err);
  } else {
    for (const auto& p : preset_names()) space.workloads.push_back(preset(p));
    space.Y = {2, 4};
    space.N = {8, 12};
    space.H = {3, 6};
  }
  space.base = env.arch;
  if (!o.opts.empty()) space.opts = parse_optimizations(o.opts);
  if (!o.presets.empty() || !o.workloads.empty()) space.workloads = workloads(o, false);

  DseResult result = explore(space, env.profile, env.budget, env.params);
  fs::path dir = output_dir(o);
  {
    auto f = open_output(dir / "dse_ranked.csv");
    write_dse_csv(f, result.ranked, result.excluded);
  }
  {
    auto f = open_output(dir / "dse_frontier.csv");
    write_frontier_csv(f, result.frontier);
  }
  const auto& best = result.ranked.front();
  out << "evaluated " << result.ranked.size() + result.excluded.size() << " points, " << result.excluded.size()
      << " excluded, frontier " << result.frontier.size() << '\n';
  out << "best [" << best.cfg.tuple_string() << "] dac_sharing=" << best.cfg.dac_sharing
      << " gops=" << units::format_double(best.gops) << " epb=" << units::format_double(best.epb_j_per_bit) << '\n';
  return kOk;
}

int cmd_verify(const Options& o, std::ostream& out, std::ostream& err) {
  Environment env = load_environment(o, err);
  std::vector<OptimizationSet> combos;
  if (o.opts.empty()) combos = all_optimization_combinations();
  else combos.push_back(parse_optimizations(o.opts));

  fs::path dir = output_dir(o);
  auto f = open_output(dir / "verify.csv");
  f << kVerifyHeader << '\n';
  bool ok = true;
  for (const auto& g : workloads(o, true)) {
    for (const auto& opts : combos) {
      Schedule s = compile(g, env.arch, opts, env.profile, env.params.ecu);
      VerifyResult v = verify_schedule(s, g, o.seed);
      const bool pass = v.max_relative_error <= kVerifyTolerance;
      ok = ok && pass;
      f << g.name << ',' << opts.label() << ',' << units::format_double(v.max_relative_error) << ','
        << units::format_double(v.output_relative_error) << ',' << g.layers[v.worst_layer].name << ','
        << (pass ? "true" : "false") << '\n';
      out << (pass ? "ok   " : "FAIL ") << g.name << " opts=" << opts.label()
          << " max_rel_err=" << units::format_double(v.max_relative_error) << '\n';
    }
  }
  if (!ok) err << "error: replay differs from direct execution by more than " << kVerifyTolerance << '\n';
  return ok ? kOk : kVerifyFailed;
}

void add_common(CLI::App* cmd, Options& o, bool multi_workload) {
  if (multi_workload) {
    cmd->add_option("--preset", o.presets, "Bundled workload name (repeatable)");
    cmd->add_option("--workload", o.workloads, "Workload JSON file (repeatable)");
  } else {
    auto* p = cmd->add_option("--preset", o.presets, "Bundled workload name");
    auto* w = cmd->add_option("--workload", o.workloads, "Workload JSON file");
    p->excludes(w);
    w->excludes(p);
  }
  cmd->add_option("--arch", o.arch, "Architecture tuple Y,N,K,H,L,M");
  cmd->add_option("--profile", o.profile, "Device profile config (falls back to DIFFLIGHT_PROFILE)");
  cmd->add_option("--out", o.out, "Output directory");
  cmd->add_option("--seed", o.seed, "Seed for weights and inputs");
}

}  // namespace

int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"Analytical simulator for a photonic diffusion-model accelerator", "difflight"};
  app.require_subcommand(1);
  Options o;

  auto* run_cmd = app.add_subcommand("run", "Compile one workload and write its cost report");
  add_common(run_cmd, o, false);
  run_cmd->add_option("--opts", o.opts, "none, all, or a comma list of sparsity, pipeline, dacshare");
  run_cmd->add_flag("--trace", o.trace, "Also write the pass and ECU trace");

  auto* ablate_cmd = app.add_subcommand("ablate", "Normalized energy for each optimization variant");
  add_common(ablate_cmd, o, true);

  auto* dse_cmd = app.add_subcommand("dse", "Exhaustive architecture search");
  add_common(dse_cmd, o, true);
  dse_cmd->add_option("--opts", o.opts, "Optimizations applied to every point");
  dse_cmd->add_option("--space", o.space, "Search space config");

  auto* verify_cmd = app.add_subcommand("verify", "Replay compiled schedules against direct execution");
  add_common(verify_cmd, o, true);
  verify_cmd->add_option("--opts", o.opts, "Single combination to check (default: all eight)");

  std::vector<std::string> rest(args.rbegin(), args.rend());
  if (!rest.empty()) rest.pop_back();
  try {
    app.parse(rest);
  } catch (const CLI::ParseError& e) {
    return app.exit(e, out, err);
  }

  try {
    if (*run_cmd) return cmd_run(o, out, err);
    if (*ablate_cmd) return cmd_ablate(o, out, err);
    if (*dse_cmd) return cmd_dse(o, out, err);
    return cmd_verify(o, out, err);
  } catch (const InfeasibleConfig& e) {
    err << "error: " << e.what() << '\n';
    return kInfeasible;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << '\n';
    return kBadInput;
  }
}

}  // namespace difflight::cli
