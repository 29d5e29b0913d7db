#pragma once

#include <fstream>
#include <map>
#include <sstream>
#include <string>
#include <vector>

#include "ifsim/common.hpp"

namespace ifsim {

// Thrown when an armed crash point fires; the simulator catches it and turns
// it into an immediate power failure, exactly before the guarded micro-step.
struct CrashSignal {
  std::string site;
  std::uint64_t occurrence = 0;
};

struct CrashPoint {
  std::string site;
  std::uint64_t occurrence = 1;  // 1-based: crash the Nth time the site is hit
};

// Known micro-step sites. Guarded writes to durable state call
// CrashInjector::hit() with one of these ids.
inline const std::vector<std::string>& crash_site_ids() {
  static const std::vector<std::string> ids = {
      "commit.shadow_copy",   // byte copy of a working copy into the inactive slot
      "commit.map_write",     // address-map entry update for one object
      "commit.publish",       // the single atomic bit-map toggle
      "sys.snapshot.chunk",   // one chunk of the system snapshot image
      "sys.snapshot.publish", // snapshot slot toggle
      "log.flush.chunk",      // one chunk of the log flush (records or data dump)
      "log.flush.publish",    // flush publication
      "log.recover.publish",  // publication of the recovered persistent state
  };
  return ids;
}

inline bool is_known_crash_site(const std::string& site) {
  for (const auto& s : crash_site_ids()) {
    if (s == site) return true;
  }
  return false;
}

class CrashInjector {
 public:
  void arm(const CrashPoint& p) {
    if (!is_known_crash_site(p.site)) {
      throw ConfigError("unknown crash site id: " + p.site);
    }
    if (p.occurrence == 0) {
      throw ConfigError("crash occurrence index is 1-based; got 0 for " + p.site);
    }
    armed_[p.site].push_back(p.occurrence);
  }

  void arm(const std::vector<CrashPoint>& plan) {
    for (const auto& p : plan) arm(p);
  }

  // Called immediately before executing the micro-step named by `site`.
  // Throws CrashSignal when an armed point matches; the step never runs.
  void hit(const std::string& site) {
    std::uint64_t n = ++counters_[site];
    auto it = armed_.find(site);
    if (it == armed_.end()) return;
    for (std::uint64_t occ : it->second) {
      if (occ == n) throw CrashSignal{site, n};
    }
  }

  // Occurrence counts observed so far, for exhaustive sweeps.
  const std::map<std::string, std::uint64_t>& counters() const { return counters_; }

  void reset_counters() { counters_.clear(); }

 private:
  std::map<std::string, std::vector<std::uint64_t>> armed_;
  std::map<std::string, std::uint64_t> counters_;
};

// Plain-text schedule: one `site_id occurrence_index` pair per line.
// '#' starts a comment; blank lines are ignored.
inline std::vector<CrashPoint> parse_crash_schedule(std::istream& in) {
  std::vector<CrashPoint> plan;
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    auto hash = line.find('#');
    if (hash != std::string::npos) line.erase(hash);
    std::istringstream ls(line);
    std::string site;
    if (!(ls >> site)) continue;
    std::uint64_t occ = 0;
    if (!(ls >> occ)) {
      throw ConfigError("crash schedule line " + std::to_string(lineno) +
                        ": missing occurrence index");
    }
    std::string extra;
    if (ls >> extra) {
      throw ConfigError("crash schedule line " + std::to_string(lineno) +
                        ": trailing token '" + extra + "'");
    }
    if (!is_known_crash_site(site)) {
      throw ConfigError("crash schedule line " + std::to_string(lineno) +
                        ": unknown crash site id: " + site);
    }
    if (occ == 0) {
      throw ConfigError("crash schedule line " + std::to_string(lineno) +
                        ": occurrence index is 1-based");
    }
    plan.push_back(CrashPoint{site, occ});
  }
  return plan;
}

inline std::vector<CrashPoint> load_crash_schedule(const std::string& path) {
  std::ifstream f(path);
  if (!f) throw ConfigError("cannot open crash schedule: " + path);
  return parse_crash_schedule(f);
}

}  // namespace ifsim
