#include <algorithm>
#include <map>
#include <ostream>

#include "difflight/schedule.hpp"
#include "difflight/units.hpp"

namespace difflight {

namespace {

double stage_a(const TilePass& p) { return p.phase(Phase::DacConvert).latency_s + p.phase(Phase::MrTune).latency_s; }

double stage_b(const TilePass& p) {
  return p.phase(Phase::OpticalPropagate).latency_s + p.phase(Phase::PdDetect).latency_s +
         p.phase(Phase::AdcConvert).latency_s;
}

void retime_serial(Schedule& s) {
  double t = 0.0;
  for (auto& layer : s.layers) {
    layer.start_s = t;
    for (std::uint32_t ti = layer.task_begin; ti < layer.task_end; ++ti) {
      Task& task = s.tasks[ti];
      task.start_s = t;
      for (std::uint32_t i = task.pass_begin; i < task.pass_end; ++i) {
        TilePass& p = s.passes[i];
        p.start_s = t;
        t += p.latency();
        p.finish_s = t;
      }
      for (std::uint32_t i = task.event_begin; i < task.event_end; ++i) {
        EcuEvent& e = s.events[i];
        e.start_s = t;
        t += e.latency_s;
        e.finish_s = t;
      }
      task.finish_s = t;
    }
    layer.finish_s = t;
  }
  s.timestep_latency_s = t;
}

struct Lane {
  double a_free = 0.0;  // converter/tuning stage
  double b_free = 0.0;  // optical/detection stage
};

void retime_pipelined(Schedule& s) {
  std::map<std::pair<int, int>, Lane> lanes;
  double layer_start = 0.0;
  for (auto& layer : s.layers) {
    layer.start_s = layer_start;
    double layer_finish = layer_start;
    for (std::uint32_t ti = layer.task_begin; ti < layer.task_end; ++ti) {
      Task& task = s.tasks[ti];
      double ready = layer_start;
      for (auto d : task.deps) ready = std::max(ready, s.tasks[d].finish_s);
      task.start_s = ready;
      double finish = ready;
      double first_finish = -1.0;

      for (std::uint32_t i = task.pass_begin; i < task.pass_end; ++i) {
        TilePass& p = s.passes[i];
        Lane& lane = lanes[{static_cast<int>(p.block.kind), p.block.index}];
        p.start_s = std::max(ready, lane.a_free);
        const double a_end = p.start_s + stage_a(p);
        const double b_start = std::max(a_end, lane.b_free);
        p.finish_s = b_start + stage_b(p);
        lane.a_free = a_end;
        lane.b_free = p.finish_s;
        finish = std::max(finish, p.finish_s);
        if (first_finish < 0.0 || p.finish_s < first_finish) first_finish = p.finish_s;
      }

      if (task.role == TaskRole::Softmax) {
        // Each logit row enters the ECU as soon as all of its dot products are digitised.
        const Task& logits = s.tasks[task.deps.front()];
        std::vector<double> row_ready(logits.gemm.rows, layer_start);
        for (std::uint32_t i = logits.pass_begin; i < logits.pass_end; ++i) {
          const TilePass& p = s.passes[i];
          for (std::uint32_t slot = p.row_begin; slot < p.row_begin + p.rows_used; ++slot) {
            double& r = row_ready[logits.gemm.dot_at(slot) / logits.gemm.cols];
            r = std::max(r, p.finish_s);
          }
        }
        double t = 0.0;
        std::uint32_t row = ~0u;
        for (std::uint32_t i = task.event_begin; i < task.event_end; ++i) {
          EcuEvent& e = s.events[i];
          if (e.row != row) {
            row = e.row;
            t = row_ready[row];
          }
          e.start_s = t;
          t += e.latency_s;
          e.finish_s = t;
          finish = std::max(finish, t);
        }
      } else if (task.pass_begin == task.pass_end) {
        double t = ready;
        for (std::uint32_t i = task.event_begin; i < task.event_end; ++i) {
          EcuEvent& e = s.events[i];
          e.start_s = t;
          t += e.latency_s;
          e.finish_s = t;
        }
        finish = std::max(finish, t);
      } else {
        // Digital accumulation consumes partial sums as they arrive.
        const double last = finish;
        for (std::uint32_t i = task.event_begin; i < task.event_end; ++i) {
          EcuEvent& e = s.events[i];
          if (e.latency_s == 0.0) {
            e.start_s = e.finish_s = last;
            continue;
          }
          const double unit = e.latency_s / static_cast<double>(e.count);
          e.start_s = first_finish;
          e.finish_s = std::max(last + unit, first_finish + e.latency_s);
          finish = std::max(finish, e.finish_s);
        }
      }
      task.finish_s = finish;
      layer_finish = std::max(layer_finish, finish);
    }
    layer.finish_s = layer_finish;
    layer_start = layer_finish;
  }
  s.timestep_latency_s = layer_start;
}

}  // namespace

void retime(Schedule& schedule, bool pipelined) {
  if (pipelined)
    retime_pipelined(schedule);
  else
    retime_serial(schedule);
}

double serial_latency(const Schedule& s) {
  double t = 0.0;
  for (const auto& p : s.passes) t += p.latency();
  for (const auto& e : s.events) t += e.latency_s;
  return t;
}

void write_trace(std::ostream& out, const Schedule& s) {
  using units::format_double;
  out << kTraceHeader << '\n';
  auto deps = [&](const Task& t) {
    std::string d;
    for (auto x : t.deps) {
      if (!d.empty()) d += ' ';
      d += std::to_string(x);
    }
    return d;
  };
  for (std::size_t i = 0; i < s.passes.size(); ++i) {
    const TilePass& p = s.passes[i];
    const Task& t = s.tasks[p.task];
    out << "pass," << i << ',' << p.layer << ',' << s.layers[p.layer].name << ',' << p.task << ','
        << task_role_name(t.role) << ',' << resource_name(p.block) << ',' << p.row_begin << ',' << p.rows_used << ','
        << p.col_tile << ',' << p.cols_used << ',' << p.macs << ',' << p.lane_ops << ','
        << (p.phase(Phase::MrTune).latency_s == 0.0 ? "none" : p.thermo_optic ? "to" : "eo") << ','
        << format_double(p.start_s) << ',' << format_double(p.finish_s);
    for (const auto& ph : p.phases) out << ',' << format_double(ph.latency_s) << ',' << format_double(ph.energy_j);
    out << ",,," << deps(t) << '\n';
  }
  for (std::size_t i = 0; i < s.events.size(); ++i) {
    const EcuEvent& e = s.events[i];
    const Task& t = s.tasks[e.task];
    out << "ecu," << i << ',' << t.layer << ',' << s.layers[t.layer].name << ',' << e.task << ','
        << task_role_name(t.role) << ",ecu," << e.row << ",,,,,,," << format_double(e.start_s) << ','
        << format_double(e.finish_s) << ",,,,,,,,,,," << ecu_op_name(e.op) << ',' << e.count << ',' << deps(t) << '\n';
  }
}

}  // namespace difflight
