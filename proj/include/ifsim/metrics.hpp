#pragma once

#include <cstdint>
#include <map>
#include <string>

#include "ifsim/common.hpp"

namespace ifsim {

struct MeanStat {
  double sum = 0.0;
  double min = 0.0;
  double max = 0.0;
  std::uint64_t n = 0;

  void add(double v) {
    if (n == 0) {
      min = max = v;
    } else {
      if (v < min) min = v;
      if (v > max) max = v;
    }
    sum += v;
    ++n;
  }

  double mean() const { return n == 0 ? 0.0 : sum / static_cast<double>(n); }
};

// Finished-task counts as the device itself would report them: they live with
// the durable state and roll back when a checkpointing scheme restores an
// older world.
struct ProgressCounters {
  std::map<std::string, std::uint64_t> finished_by_workload;
  std::uint64_t finished_total = 0;
  std::uint64_t finished_long = 0;   // long-running workload group
  std::uint64_t finished_small = 0;  // everything else

  void bump(const std::string& workload, bool long_running) {
    ++finished_by_workload[workload];
    ++finished_total;
    if (long_running) {
      ++finished_long;
    } else {
      ++finished_small;
    }
  }
};

// Measured from outside the device; never rolled back.
struct Metrics {
  std::uint64_t power_on_count = 0;
  std::uint64_t power_failure_count = 0;
  std::uint64_t lv_interrupts = 0;
  std::uint64_t crash_injections = 0;

  std::uint64_t commits = 0;
  std::uint64_t aborts_validation = 0;
  std::uint64_t aborts_early = 0;
  std::uint64_t lengthy_detections = 0;
  std::uint64_t suspensions_lv = 0;  // lengthy tasks parked by low voltage

  std::uint64_t checkpoints = 0;  // snapshot or log-flush publications
  std::uint64_t recoveries = 0;

  MeanStat suspension_ms;  // task-blocking checkpoint/flush windows
  MeanStat recovery_ms;
  MeanStat recentness_ms;  // age of durable data at each power failure

  std::uint64_t validate_calls = 0;
  std::uint64_t validate_comparisons_total = 0;
  std::uint64_t validate_comparisons_max = 0;
  bool validate_bound_ok = true;

  std::uint64_t resume_ops = 0;  // records touched across all recoveries
};

}  // namespace ifsim
