#pragma once

#include <filesystem>
#include <fstream>
#include <iomanip>
#include <ostream>
#include <string>
#include <vector>

#include <json.hpp>

#include "ifsim/config.hpp"
#include "ifsim/simulator.hpp"

namespace ifsim {

struct RunResult {
  SimConfig cfg;
  Metrics metrics;
  ProgressCounters counters;
  std::string digest;
  std::vector<std::string> events;
  Micros powered_us = 0;
  double sim_seconds = 0.0;
};

inline RunResult run_experiment(const SimConfig& cfg) {
  Simulator sim(cfg);
  sim.run();
  RunResult r;
  r.cfg = cfg;
  r.metrics = sim.metrics();
  r.counters = sim.counters();
  r.digest = sim.digest_hex();
  r.events = sim.events();
  r.powered_us = sim.powered_us();
  r.sim_seconds = static_cast<double>(cfg.duration_us) * 1e-6;
  return r;
}

inline nlohmann::json mean_stat_json(const MeanStat& s) {
  return {{"mean", s.mean()}, {"min", s.n ? s.min : 0.0}, {"max", s.n ? s.max : 0.0},
          {"samples", s.n}};
}

inline nlohmann::json report_json(const RunResult& r) {
  const Metrics& m = r.metrics;
  nlohmann::json j;
  j["scheme"] = to_string(r.cfg.scheme);
  j["seed"] = r.cfg.seed;
  j["trace"] = r.cfg.trace.name;
  j["duration_ms"] = r.cfg.duration_us / 1000;
  j["checkpoint_period_ms"] = r.cfg.checkpoint_period_us / 1000;
  j["digest"] = r.digest;
  j["powered_ms"] = r.powered_us / 1000;

  nlohmann::json fp;
  fp["finished_total"] = r.counters.finished_total;
  fp["finished_long"] = r.counters.finished_long;
  fp["finished_small"] = r.counters.finished_small;
  fp["per_second_small"] = static_cast<double>(r.counters.finished_small) / r.sim_seconds;
  fp["per_second_long"] = static_cast<double>(r.counters.finished_long) / r.sim_seconds;
  fp["by_workload"] = r.counters.finished_by_workload;
  j["forward_progress"] = fp;

  nlohmann::json p;
  p["power_on_count"] = m.power_on_count;
  p["power_failure_count"] = m.power_failure_count;
  p["lv_interrupts"] = m.lv_interrupts;
  p["crash_injections"] = m.crash_injections;
  j["power"] = p;

  nlohmann::json tx;
  tx["commits"] = m.commits;
  tx["aborts_validation"] = m.aborts_validation;
  tx["aborts_early"] = m.aborts_early;
  tx["lengthy_detections"] = m.lengthy_detections;
  tx["suspensions_lv"] = m.suspensions_lv;
  tx["validate_calls"] = m.validate_calls;
  tx["validate_comparisons_total"] = m.validate_comparisons_total;
  tx["validate_comparisons_max"] = m.validate_comparisons_max;
  tx["validate_bound_ok"] = m.validate_bound_ok;
  j["transactions"] = tx;

  nlohmann::json ck;
  ck["checkpoints"] = m.checkpoints;
  ck["recoveries"] = m.recoveries;
  ck["resume_ops"] = m.resume_ops;
  ck["suspension_ms"] = mean_stat_json(m.suspension_ms);
  ck["recovery_ms"] = mean_stat_json(m.recovery_ms);
  ck["data_recentness_ms"] = mean_stat_json(m.recentness_ms);
  j["checkpointing"] = ck;
  return j;
}

// progress.csv: one row per workload plus the two aggregates.
inline void write_progress_csv(std::ostream& os, const RunResult& r) {
  os << "workload,finished,per_second\n";
  for (const auto& [name, n] : r.counters.finished_by_workload) {
    os << name << ',' << n << ',' << static_cast<double>(n) / r.sim_seconds << '\n';
  }
  os << "ALL_SMALL," << r.counters.finished_small << ','
     << static_cast<double>(r.counters.finished_small) / r.sim_seconds << '\n';
  os << "ALL_LONG," << r.counters.finished_long << ','
     << static_cast<double>(r.counters.finished_long) / r.sim_seconds << '\n';
}

inline void write_artifacts(const std::string& dir, const RunResult& r) {
  namespace fs = std::filesystem;
  fs::create_directories(dir);
  {
    std::ofstream f(fs::path(dir) / "report.json");
    f << report_json(r).dump(2) << '\n';
  }
  {
    std::ofstream f(fs::path(dir) / "events.ndjson");
    for (const auto& line : r.events) f << line << '\n';
  }
  {
    std::ofstream f(fs::path(dir) / "progress.csv");
    write_progress_csv(f, r);
  }
}

inline void print_summary(std::ostream& os, const RunResult& r) {
  const Metrics& m = r.metrics;
  os << "scheme " << to_string(r.cfg.scheme) << ", trace " << r.cfg.trace.name << ", "
     << r.sim_seconds << " s simulated, seed " << r.cfg.seed << "\n";
  os << "  finished: " << r.counters.finished_total << " (" << r.counters.finished_small
     << " small, " << r.counters.finished_long << " long)\n";
  os << "  power cycles: " << m.power_failure_count << " failures, " << m.lv_interrupts
     << " low-voltage interrupts";
  if (m.crash_injections) os << ", " << m.crash_injections << " injected crashes";
  os << "\n";
  os << "  commits " << m.commits << ", aborts " << m.aborts_validation << " validation / "
     << m.aborts_early << " early\n";
  os << std::fixed << std::setprecision(3);
  os << "  suspension " << m.suspension_ms.mean() << " ms mean, recovery "
     << m.recovery_ms.mean() << " ms mean, recentness " << m.recentness_ms.mean()
     << " ms mean\n";
  os << "  digest " << r.digest << "\n";
  os.unsetf(std::ios::fixed);
}

// Side-by-side table over schemes on the identical config/trace/seed, with
// ratio rows for the small-task (non-lengthy) aggregate.
inline void compare_schemes(std::ostream& os, SimConfig base, const std::vector<Scheme>& schemes) {
  std::vector<RunResult> rs;
  for (Scheme s : schemes) {
    SimConfig c = base;
    c.scheme = s;
    c.event_log = false;
    rs.push_back(run_experiment(c));
  }
  os << std::left << std::setw(22) << "metric";
  for (const auto& r : rs) os << std::right << std::setw(18) << to_string(r.cfg.scheme);
  os << '\n';
  auto row = [&](const std::string& name, auto get) {
    os << std::left << std::setw(22) << name;
    for (const auto& r : rs) os << std::right << std::setw(18) << get(r);
    os << '\n';
  };
  row("finished_small", [](const RunResult& r) { return r.counters.finished_small; });
  row("finished_long", [](const RunResult& r) { return r.counters.finished_long; });
  row("power_failures", [](const RunResult& r) { return r.metrics.power_failure_count; });
  row("checkpoints", [](const RunResult& r) { return r.metrics.checkpoints; });
  auto fmt = [](double v) {
    std::ostringstream t;
    t << std::fixed << std::setprecision(3) << v;
    return t.str();
  };
  row("suspension_ms", [&](const RunResult& r) { return fmt(r.metrics.suspension_ms.mean()); });
  row("recovery_ms", [&](const RunResult& r) { return fmt(r.metrics.recovery_ms.mean()); });
  row("recentness_ms", [&](const RunResult& r) { return fmt(r.metrics.recentness_ms.mean()); });
  row("digest", [](const RunResult& r) { return r.digest; });
  for (std::size_t i = 1; i < rs.size(); ++i) {
    double a = static_cast<double>(rs[0].counters.finished_small);
    double b = static_cast<double>(rs[i].counters.finished_small);
    os << std::left << std::setw(22)
       << (std::string(to_string(rs[0].cfg.scheme)) + "/" + to_string(rs[i].cfg.scheme));
    os << std::right << std::setw(18) << (b > 0 ? fmt(a / b) : "inf") << "  (small-task ratio)\n";
  }
}

}  // namespace ifsim
