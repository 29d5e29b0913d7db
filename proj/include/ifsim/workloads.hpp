#pragma once

#include <algorithm>
#include <cmath>
#include <fstream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "ifsim/common.hpp"
#include "ifsim/memory.hpp"

namespace ifsim {

enum class AccessKind { Read, Write };

inline const char* to_string(AccessKind k) { return k == AccessKind::Read ? "read" : "write"; }

// One data access within a task body, placed at a fraction of total progress.
struct ScriptStep {
  double percent = 0.0;
  AccessKind kind = AccessKind::Read;
  ObjectId obj = 0;
};

// A task body: measured execution time and energy for each placement region,
// plus the data accesses it performs. Every task commits at 100% progress.
struct Workload {
  std::string name;
  Micros vm_time_us = 0;
  Micros nvm_time_us = 0;
  std::uint64_t vm_energy_nj = 0;
  std::uint64_t nvm_energy_nj = 0;
  std::vector<ScriptStep> script;
  bool repeat = true;
  // Metrics grouping: workloads too long to finish within one power-on period
  // of the reference traces are reported in the "lengthy" aggregate.
  bool long_running = false;
  Micros respawn_delay_us = 0;

  Micros duration_us(MemRegion r) const {
    return r == MemRegion::VM ? vm_time_us : nvm_time_us;
  }

  double energy_j(MemRegion r) const {
    return 1e-9 * static_cast<double>(r == MemRegion::VM ? vm_energy_nj : nvm_energy_nj);
  }

  double draw_w(MemRegion r) const {
    return energy_j(r) / (static_cast<double>(duration_us(r)) * 1e-6);
  }
};

// A script step bound to an absolute progress offset for one region.
struct BoundStep {
  Micros offset_us = 0;
  AccessKind kind = AccessKind::Read;
  ObjectId obj = 0;
};

inline std::vector<BoundStep> bind_script(const Workload& w, MemRegion region) {
  Micros total = w.duration_us(region);
  std::vector<BoundStep> out;
  out.reserve(w.script.size());
  for (const auto& s : w.script) {
    auto off = static_cast<Micros>(std::llround(s.percent / 100.0 * static_cast<double>(total)));
    if (off > total) off = total;
    out.push_back(BoundStep{off, s.kind, s.obj});
  }
  std::stable_sort(out.begin(), out.end(),
                   [](const BoundStep& a, const BoundStep& b) { return a.offset_us < b.offset_us; });
  return out;
}

// The five measured task bodies used by the reference experiments. Times and
// energies are per placement region. The hash task reads the four producer
// objects immediately before committing its own output object; grouping the
// reads with the commit keeps its read-to-commit window inside one scheduler
// slice, which is the only placement under which a long-running reader of
// frequently recommitted objects can ever pass backward validation.
inline std::vector<Workload> builtin_workloads() {
  std::vector<Workload> v;
  v.push_back(Workload{"MatMul", 439'000, 470'000, 1'670'000, 2'210'000,
                       {{95, AccessKind::Write, 0}}, true, true, 0});
  v.push_back(Workload{"FIR", 336'000, 352'000, 1'440'000, 1'560'000,
                       {{95, AccessKind::Write, 1}}, true, true, 0});
  v.push_back(Workload{"SHA256", 246'000, 265'000, 1'040'000, 1'370'000,
                       {{95, AccessKind::Write, 4},
                        {100, AccessKind::Read, 0},
                        {100, AccessKind::Read, 1},
                        {100, AccessKind::Read, 2},
                        {100, AccessKind::Read, 3}},
                       true, true, 0});
  v.push_back(Workload{"FloatMath", 1'890, 1'900, 5'600, 5'700,
                       {{95, AccessKind::Write, 2}}, true, false, 0});
  v.push_back(Workload{"IntMath", 1'500, 1'530, 4'300, 4'400,
                       {{95, AccessKind::Write, 3}}, true, false, 0});
  return v;
}

namespace detail {

inline std::string trim(const std::string& s) {
  std::size_t a = s.find_first_not_of(" \t\r\n");
  if (a == std::string::npos) return "";
  std::size_t b = s.find_last_not_of(" \t\r\n");
  return s.substr(a, b - a + 1);
}

inline bool parse_bool(const std::string& v, const std::string& where) {
  if (v == "true" || v == "1" || v == "yes") return true;
  if (v == "false" || v == "0" || v == "no") return false;
  throw ConfigError(where + ": expected boolean, got '" + v + "'");
}

}  // namespace detail

// Workload files: one [workload] section per task body.
//
//   [workload]
//   name = IntMath
//   vm_time_us = 1500
//   nvm_time_us = 1530
//   vm_energy_nj = 4300
//   nvm_energy_nj = 4400
//   at 95 write 3
//   commit
//
// Script lines are `at <percent> read|write <obj>`; the body ends with the
// mandatory `commit` line. Optional keys: repeat, long_running,
// respawn_delay_us.
inline std::vector<Workload> parse_workloads(std::istream& in) {
  std::vector<Workload> out;
  std::optional<Workload> cur;
  bool saw_commit = false;
  std::size_t lineno = 0;

  auto finish_section = [&]() {
    if (!cur) return;
    const std::string where = "workload '" + cur->name + "'";
    if (cur->name.empty()) throw ConfigError("workload section missing name");
    if (cur->vm_time_us == 0) throw ConfigError(where + ": missing or zero vm_time_us");
    if (cur->nvm_time_us == 0) throw ConfigError(where + ": missing or zero nvm_time_us");
    if (cur->vm_energy_nj == 0) throw ConfigError(where + ": missing or zero vm_energy_nj");
    if (cur->nvm_energy_nj == 0) throw ConfigError(where + ": missing or zero nvm_energy_nj");
    if (!saw_commit) throw ConfigError(where + ": script must end with a commit line");
    out.push_back(*cur);
    cur.reset();
    saw_commit = false;
  };

  std::string raw;
  while (std::getline(in, raw)) {
    ++lineno;
    auto hash = raw.find('#');
    if (hash != std::string::npos) raw.erase(hash);
    std::string line = detail::trim(raw);
    if (line.empty()) continue;
    const std::string at_line = "line " + std::to_string(lineno);

    if (line.front() == '[') {
      if (line != "[workload]") {
        throw ConfigError(at_line + ": unexpected section '" + line + "' in workload file");
      }
      finish_section();
      cur = Workload{};
      cur->script.clear();
      continue;
    }
    if (!cur) throw ConfigError(at_line + ": content before first [workload] section");
    if (saw_commit) throw ConfigError(at_line + ": script lines after commit");

    if (line == "commit") {
      saw_commit = true;
      continue;
    }
    if (line.rfind("at ", 0) == 0) {
      std::istringstream ls(line);
      std::string at_kw, kind_s;
      double pct = 0;
      long long obj = -1;
      if (!(ls >> at_kw >> pct >> kind_s >> obj)) {
        throw ConfigError(at_line + ": expected `at <percent> read|write <obj>`");
      }
      if (pct < 0.0 || pct > 100.0) {
        throw ConfigError(at_line + ": percent must be within [0,100]");
      }
      AccessKind k;
      if (kind_s == "read") {
        k = AccessKind::Read;
      } else if (kind_s == "write") {
        k = AccessKind::Write;
      } else {
        throw ConfigError(at_line + ": access must be read or write, got '" + kind_s + "'");
      }
      if (obj < 0) throw ConfigError(at_line + ": object id must be >= 0");
      cur->script.push_back(ScriptStep{pct, k, static_cast<ObjectId>(obj)});
      continue;
    }

    auto eq = line.find('=');
    if (eq == std::string::npos) {
      throw ConfigError(at_line + ": expected key = value, script line, or commit");
    }
    std::string key = detail::trim(line.substr(0, eq));
    std::string val = detail::trim(line.substr(eq + 1));
    try {
      if (key == "name") {
        cur->name = val;
      } else if (key == "vm_time_us") {
        cur->vm_time_us = std::stoull(val);
      } else if (key == "nvm_time_us") {
        cur->nvm_time_us = std::stoull(val);
      } else if (key == "vm_energy_nj") {
        cur->vm_energy_nj = std::stoull(val);
      } else if (key == "nvm_energy_nj") {
        cur->nvm_energy_nj = std::stoull(val);
      } else if (key == "repeat") {
        cur->repeat = detail::parse_bool(val, at_line);
      } else if (key == "long_running") {
        cur->long_running = detail::parse_bool(val, at_line);
      } else if (key == "respawn_delay_us") {
        cur->respawn_delay_us = std::stoull(val);
      } else {
        throw ConfigError(at_line + ": unknown workload key '" + key + "'");
      }
    } catch (const std::invalid_argument&) {
      throw ConfigError(at_line + ": invalid value '" + val + "' for " + key);
    } catch (const std::out_of_range&) {
      throw ConfigError(at_line + ": value out of range for " + key);
    }
  }
  finish_section();
  if (out.empty()) throw ConfigError("workload file defines no workloads");
  return out;
}

inline std::vector<Workload> load_workloads(const std::string& path) {
  std::ifstream f(path);
  if (!f) throw ConfigError("cannot open workload file: " + path);
  return parse_workloads(f);
}

inline std::string serialize_workloads(const std::vector<Workload>& ws) {
  std::ostringstream os;
  for (const auto& w : ws) {
    os << "[workload]\n";
    os << "name = " << w.name << '\n';
    os << "vm_time_us = " << w.vm_time_us << '\n';
    os << "nvm_time_us = " << w.nvm_time_us << '\n';
    os << "vm_energy_nj = " << w.vm_energy_nj << '\n';
    os << "nvm_energy_nj = " << w.nvm_energy_nj << '\n';
    if (!w.repeat) os << "repeat = false\n";
    if (w.long_running) os << "long_running = true\n";
    if (w.respawn_delay_us > 0) os << "respawn_delay_us = " << w.respawn_delay_us << '\n';
    for (const auto& s : w.script) {
      os << "at " << s.percent << ' ' << to_string(s.kind) << ' ' << s.obj << '\n';
    }
    os << "commit\n\n";
  }
  return os.str();
}

}  // namespace ifsim
