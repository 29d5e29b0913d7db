#pragma once

#include <fstream>
#include <istream>
#include <map>
#include <sstream>
#include <string>
#include <vector>

#include "ifsim/simulator.hpp"

namespace ifsim {

// Experiment files are plain-text `key = value` lines under `[section]`
// headers. `#` and `;` start comments. Unknown sections and keys are errors;
// all problems in a file are reported together, not one at a time.
//
//   [experiment]
//   scheme = OURS
//   trace = weak
//   duration_ms = 100000
//   seed = 1
//   checkpoint_period_ms = 20
//
//   [costs]
//   sys_suspend_us = 7500
//   ...

namespace detail {

struct IniEntry {
  std::string section;
  std::string key;
  std::string value;
  std::size_t line = 0;
};

inline std::vector<IniEntry> parse_ini(std::istream& in, std::vector<std::string>& problems) {
  std::vector<IniEntry> out;
  std::string line;
  std::string section;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    std::size_t cut = line.find_first_of("#;");
    if (cut != std::string::npos) line = line.substr(0, cut);
    line = trim(line);
    if (line.empty()) continue;
    if (line.front() == '[') {
      if (line.back() != ']') {
        problems.push_back("line " + std::to_string(lineno) + ": unterminated section header");
        continue;
      }
      section = trim(line.substr(1, line.size() - 2));
      continue;
    }
    std::size_t eq = line.find('=');
    if (eq == std::string::npos) {
      problems.push_back("line " + std::to_string(lineno) + ": expected key = value, got '" +
                         line + "'");
      continue;
    }
    IniEntry e;
    e.section = section;
    e.key = trim(line.substr(0, eq));
    e.value = trim(line.substr(eq + 1));
    e.line = lineno;
    if (e.key.empty()) {
      problems.push_back("line " + std::to_string(lineno) + ": empty key");
      continue;
    }
    out.push_back(std::move(e));
  }
  return out;
}

struct ValueReader {
  const IniEntry& e;
  std::vector<std::string>& problems;

  std::string where() const { return "line " + std::to_string(e.line) + " [" + e.section + "] " + e.key; }

  std::uint64_t u64() const {
    try {
      std::size_t pos = 0;
      std::uint64_t v = std::stoull(e.value, &pos);
      if (pos != e.value.size()) throw std::invalid_argument("trailing");
      return v;
    } catch (const std::exception&) {
      problems.push_back(where() + ": expected unsigned integer, got '" + e.value + "'");
      return 0;
    }
  }

  double num() const {
    try {
      std::size_t pos = 0;
      double v = std::stod(e.value, &pos);
      if (pos != e.value.size()) throw std::invalid_argument("trailing");
      return v;
    } catch (const std::exception&) {
      problems.push_back(where() + ": expected number, got '" + e.value + "'");
      return 0.0;
    }
  }

  bool boolean() const {
    if (e.value == "true" || e.value == "1" || e.value == "yes") return true;
    if (e.value == "false" || e.value == "0" || e.value == "no") return false;
    problems.push_back(where() + ": expected boolean, got '" + e.value + "'");
    return false;
  }
};

}  // namespace detail

inline PowerTrace resolve_trace(const std::string& name_or_path) {
  if (name_or_path == "strong") return builtin_trace_strong();
  if (name_or_path == "weak") return builtin_trace_weak();
  std::ifstream f(name_or_path);
  if (!f) {
    throw ConfigError("trace '" + name_or_path +
                      "' is neither a builtin (strong, weak) nor a readable file");
  }
  return parse_power_trace(f, name_or_path);
}

inline SimConfig parse_experiment_config(std::istream& in) {
  std::vector<std::string> problems;
  auto entries = detail::parse_ini(in, problems);
  SimConfig cfg;
  std::string trace_ref;
  std::string workloads_file;
  std::string crash_inline;
  std::string crash_file;

  for (const auto& e : entries) {
    detail::ValueReader v{e, problems};
    const std::string id = e.section + "." + e.key;
    if (id == "experiment.scheme") {
      try {
        cfg.scheme = parse_scheme(e.value);
      } catch (const ConfigError& err) {
        problems.push_back(v.where() + ": " + err.what());
      }
    } else if (id == "experiment.seed") {
      cfg.seed = v.u64();
    } else if (id == "experiment.duration_ms") {
      cfg.duration_us = v.u64() * 1000;
    } else if (id == "experiment.duration_us") {
      cfg.duration_us = v.u64();
    } else if (id == "experiment.tick_period_us") {
      cfg.tick_period_us = v.u64();
    } else if (id == "experiment.checkpoint_period_ms") {
      cfg.checkpoint_period_us = v.u64() * 1000;
    } else if (id == "experiment.trace") {
      trace_ref = e.value;
    } else if (id == "experiment.event_log") {
      cfg.event_log = v.boolean();
    } else if (id == "power.capacitance_uf") {
      cfg.power.capacitance_f = v.num() * 1e-6;
    } else if (id == "power.v_on") {
      cfg.power.v_on = v.num();
    } else if (id == "power.v_off") {
      cfg.power.v_off = v.num();
    } else if (id == "power.v_op") {
      cfg.power.v_op = v.num();
    } else if (id == "power.v_max") {
      cfg.power.v_max = v.num();
    } else if (id == "power.v_th") {
      cfg.power.v_th = v.num();
    } else if (id == "power.p_max_mw") {
      cfg.power.p_max_w = v.num() * 1e-3;
    } else if (id == "power.idle_draw_mw") {
      cfg.power.idle_draw_w = v.num() * 1e-3;
    } else if (id == "memory.vm_bytes") {
      cfg.vm_bytes = v.u64();
    } else if (id == "memory.nvm_bytes") {
      cfg.nvm_bytes = v.u64();
    } else if (id == "data.object_count") {
      cfg.object_count = v.u64();
    } else if (id == "data.object_size") {
      cfg.object_size = v.u64();
    } else if (id == "data.commit_map_width") {
      cfg.commit_map_width = static_cast<unsigned>(v.u64());
    } else if (id == "data.stack_bytes" || id == "memory.stack_bytes") {
      cfg.stack_bytes = v.u64();
    } else if (id == "costs.recovery_fixed_us") {
      cfg.costs.recovery_fixed_us = v.u64();
    } else if (id == "costs.recovery_per_task_us") {
      cfg.costs.recovery_per_task_us = v.u64();
    } else if (id == "costs.sys_suspend_us") {
      cfg.costs.sys_suspend_us = v.u64();
    } else if (id == "costs.sys_recover_us") {
      cfg.costs.sys_recover_us = v.u64();
    } else if (id == "costs.log_suspend_us") {
      cfg.costs.log_suspend_us = v.u64();
    } else if (id == "costs.log_recover_us") {
      cfg.costs.log_recover_us = v.u64();
    } else if (id == "costs.read_us") {
      cfg.costs.read_us = v.u64();
    } else if (id == "costs.write_us") {
      cfg.costs.write_us = v.u64();
    } else if (id == "costs.commit_us") {
      cfg.costs.commit_us = v.u64();
    } else if (id == "workloads.file") {
      workloads_file = e.value;
    } else if (id == "crash.schedule") {
      crash_inline = e.value;
    } else if (id == "crash.file") {
      crash_file = e.value;
    } else {
      problems.push_back(v.where() + ": unknown key");
    }
  }

  if (!trace_ref.empty()) {
    try {
      cfg.trace = resolve_trace(trace_ref);
    } catch (const ConfigError& err) {
      problems.push_back(std::string("trace: ") + err.what());
    }
  }
  if (!workloads_file.empty()) {
    try {
      cfg.workloads = load_workloads(workloads_file);
    } catch (const ConfigError& err) {
      problems.push_back(std::string("workloads: ") + err.what());
    }
  }
  if (!crash_inline.empty() && !crash_file.empty()) {
    problems.push_back("crash: schedule and file are mutually exclusive");
  }
  try {
    if (!crash_inline.empty()) {
      std::istringstream cs(crash_inline);
      cfg.crash_plan = parse_crash_schedule(cs);
    } else if (!crash_file.empty()) {
      cfg.crash_plan = load_crash_schedule(crash_file);
    }
  } catch (const ConfigError& err) {
    problems.push_back(std::string("crash: ") + err.what());
  }

  if (!problems.empty()) {
    std::string msg = "experiment config rejected:";
    for (const auto& p : problems) msg += "\n  - " + p;
    throw ConfigError(msg);
  }
  return cfg;
}

inline SimConfig load_experiment_config(const std::string& path) {
  std::ifstream f(path);
  if (!f) throw ConfigError("cannot open config file: " + path);
  return parse_experiment_config(f);
}

}  // namespace ifsim
