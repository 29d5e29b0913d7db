#pragma once

#include <algorithm>
#include <cctype>
#include <cstdint>
#include <functional>
#include <initializer_list>
#include <limits>
#include <map>
#include <optional>
#include <sstream>
#include <string>
#include <utility>
#include <vector>

#include "ifsim/common.hpp"
#include "ifsim/crash.hpp"
#include "ifsim/datamgr.hpp"
#include "ifsim/event_queue.hpp"
#include "ifsim/kernel.hpp"
#include "ifsim/memory.hpp"
#include "ifsim/metrics.hpp"
#include "ifsim/power.hpp"
#include "ifsim/recovery.hpp"
#include "ifsim/workloads.hpp"

namespace ifsim {

enum class Scheme { Ours, Sys, Log, NaiveRerun };

inline const char* to_string(Scheme s) {
  switch (s) {
    case Scheme::Ours: return "OURS";
    case Scheme::Sys: return "SYS";
    case Scheme::Log: return "LOG";
    case Scheme::NaiveRerun: return "NAIVE_RERUN";
  }
  return "?";
}

inline Scheme parse_scheme(const std::string& s) {
  if (s == "OURS" || s == "ours") return Scheme::Ours;
  if (s == "SYS" || s == "sys") return Scheme::Sys;
  if (s == "LOG" || s == "log") return Scheme::Log;
  if (s == "NAIVE_RERUN" || s == "naive_rerun" || s == "naive") return Scheme::NaiveRerun;
  throw ConfigError("unknown scheme: " + s + " (expected OURS, SYS, LOG, NAIVE_RERUN)");
}

struct CostModel {
  // Instant-recovery path: fixed cost plus a per-unfinished-task scan cost.
  Micros recovery_fixed_us = 100;
  Micros recovery_per_task_us = 100;
  // Full-snapshot checkpointing.
  Micros sys_suspend_us = 7500;
  Micros sys_recover_us = 7600;
  // Write-ahead-log checkpointing.
  Micros log_suspend_us = 3200;
  Micros log_recover_us = 7000;
  // Optional per-operation latencies, consumed as task run time.
  Micros read_us = 0;
  Micros write_us = 0;
  Micros commit_us = 0;
};

struct SimConfig {
  Scheme scheme = Scheme::Ours;
  std::uint64_t seed = 1;
  Micros duration_us = 10'000'000;
  Micros tick_period_us = 1000;
  PowerParams power{};
  PowerTrace trace = builtin_trace_strong();
  std::size_t vm_bytes = 8192;
  std::size_t nvm_bytes = 262144;
  std::size_t object_count = 5;
  std::size_t object_size = 64;
  unsigned commit_map_width = 16;
  std::size_t stack_bytes = 256;
  std::vector<Workload> workloads = builtin_workloads();
  CostModel costs{};
  Micros checkpoint_period_us = 20'000;
  std::vector<CrashPoint> crash_plan;
  bool event_log = true;
};

// One committed or in-flight write, as buffered in VM and retained in flush
// images: before/after values plus the committing task's identity.
struct LogRecord {
  std::uint64_t seq = 0;
  RecordId rec = 0;
  TaskUid task = 0;
  ObjectId obj = 0;
  Bytes old_value;
  Bytes new_value;
  Timestamp ts = 0;
  AllocId alloc = 0;  // VM accounting while buffered
};

// Deep copy of the rollback-able world: everything the full-snapshot baseline
// persists, and the metadata part of what the log baseline persists.
struct WorldSnapshot {
  MemoryModel mem;
  DmCore dm;
  KernelCore kernel;
  RecoveryCore recovery;
  ProgressCounters counters;
  Timestamp ctx = 0;
  std::uint64_t bytes = 0;
};

struct LogImage {
  WorldSnapshot world;
  std::map<ObjectId, Bytes> raw;  // data dump, including uncommitted working copies
  std::vector<LogRecord> redo;    // commits since the previous flush
  std::vector<LogRecord> undo;    // unfinished writes with flush-consistent before-images
  std::uint64_t bytes = 0;
};

class Simulator {
 public:
  // Subsystems hold references to each other; the object must stay put.
  Simulator(const Simulator&) = delete;
  Simulator& operator=(const Simulator&) = delete;

  explicit Simulator(SimConfig cfg)
      : cfg_(validated(std::move(cfg))),
        queue_(clock_),
        mem_(cfg_.vm_bytes, cfg_.nvm_bytes),
        power_(cfg_.power, cfg_.trace, static_cast<double>(cfg_.tick_period_us) * 1e-6),
        dm_(dm_config(cfg_), clock_, mem_, crash_),
        kernel_(clock_, mem_),
        rec_(mem_) {
    clock_.tick_period_us = cfg_.tick_period_us;
    crash_.arm(cfg_.crash_plan);

    dm_.on_finished = [this](RecordId r, const ValidityInterval& iv) {
      rec_.mark_finished(r, iv);
    };
    dm_.on_durable_update = [this] { last_durable_powered_us_ = powered_us_; };
    if (cfg_.scheme == Scheme::Log) {
      dm_.on_commit_write = [this](TaskUid uid, RecordId r, ObjectId obj, const Bytes& oldv,
                                   const Bytes& newv) { append_log_record(uid, r, obj, oldv, newv); };
      // Both flush image slots are carved out of NVM up front so publication
      // never changes the allocation layout.
      slot_budget_ = cfg_.vm_bytes + 8192;
      slot_alloc_[0] = mem_.allocate(MemRegion::NVM, slot_budget_, "flush_image", 0);
      slot_alloc_[1] = mem_.allocate(MemRegion::NVM, slot_budget_, "flush_image", 0);
    } else if (cfg_.scheme == Scheme::Sys) {
      slot_budget_ = cfg_.vm_bytes + 8192;
      slot_alloc_[0] = mem_.allocate(MemRegion::NVM, slot_budget_, "snapshot_image", 0);
      slot_alloc_[1] = mem_.allocate(MemRegion::NVM, slot_budget_, "snapshot_image", 0);
    }

    for (std::size_t i = 0; i < cfg_.workloads.size(); ++i) {
      rec_.create_record(i, cfg_.workloads[i].name);
    }
    initial_world_ = capture_world();
    log_line("run", {{"scheme", to_string(cfg_.scheme)},
                     {"seed", std::to_string(cfg_.seed)},
                     {"trace", cfg_.trace.name}});
  }

  const SimConfig& config() const { return cfg_; }
  const SimClock& clock() const { return clock_; }
  const PowerModel& power() const { return power_; }
  const MemoryModel& memory() const { return mem_; }
  const DataManager& dm() const { return dm_; }
  const Kernel& kernel() const { return kernel_; }
  const RecoveryHandler& recovery() const { return rec_; }
  const Metrics& metrics() const { return metrics_; }
  const ProgressCounters& counters() const { return counters_; }
  const CrashInjector& crash() const { return crash_; }
  const std::vector<std::string>& events() const { return events_; }
  Micros powered_us() const { return powered_us_; }

  std::string digest_hex() const {
    static const char* d = "0123456789abcdef";
    std::string s(16, '0');
    for (int i = 0; i < 16; ++i) s[i] = d[(digest_ >> (60 - 4 * i)) & 0xF];
    return s;
  }

  void run() { run_until(cfg_.duration_us); }

  void run_until(Micros t_end) {
    while (clock_.now_us < t_end) {
      if (power_.pending_transition()) {
        apply_power_transition();
        continue;
      }
      Micros t_next = t_end;
      if (auto nd = queue_.next_deadline()) t_next = std::min(t_next, *nd);
      double draw = current_draw();
      Micros pe = power_.micros_to_next_event(draw);
      if (pe < std::numeric_limits<Micros>::max() - clock_.now_us) {
        t_next = std::min(t_next, clock_.now_us + pe);
      }
      if (t_next <= clock_.now_us) {
        fire_queue();
        continue;
      }
      Micros span = t_next - clock_.now_us;
      power_.integrate(span, draw);
      accrue_progress(span);
      if (power_.device_on()) powered_us_ += span;
      clock_.now_us = t_next;
      // Power transitions due at this instant preempt queue events at the
      // same instant; a power failure cancels them outright.
      if (power_.pending_transition()) continue;
      fire_queue();
    }
  }

 private:
  static SimConfig validated(SimConfig cfg) {
    std::vector<std::string> problems;
    if (cfg.duration_us == 0) problems.push_back("duration must be positive");
    if (cfg.tick_period_us == 0) problems.push_back("tick period must be positive");
    if (cfg.object_size == 0) problems.push_back("object size must be positive");
    if (cfg.commit_map_width == 0 || cfg.commit_map_width > 16) {
      problems.push_back("commit map width must be between 1 and 16");
    } else if (cfg.object_count > cfg.commit_map_width) {
      problems.push_back("object count " + std::to_string(cfg.object_count) +
                         " exceeds commit map width " + std::to_string(cfg.commit_map_width));
    }
    if (cfg.workloads.empty()) problems.push_back("no workloads configured");
    for (std::size_t i = 0; i < cfg.workloads.size(); ++i) {
      const Workload& w = cfg.workloads[i];
      if (w.vm_time_us == 0 || w.nvm_time_us == 0) {
        problems.push_back("workload '" + w.name + "': execution times must be positive");
      }
      for (const ScriptStep& s : w.script) {
        if (s.obj >= cfg.object_count) {
          problems.push_back("workload '" + w.name + "': script references object " +
                             std::to_string(s.obj) + " but only " +
                             std::to_string(cfg.object_count) + " objects exist");
        }
      }
    }
    if (cfg.scheme == Scheme::Sys && cfg.costs.sys_suspend_us >= cfg.checkpoint_period_us) {
      problems.push_back("snapshot window must be shorter than the checkpoint period");
    }
    if (cfg.scheme == Scheme::Log && cfg.costs.log_suspend_us >= cfg.checkpoint_period_us) {
      problems.push_back("flush window must be shorter than the checkpoint period");
    }
    for (const CrashPoint& p : cfg.crash_plan) {
      if (!is_known_crash_site(p.site)) problems.push_back("unknown crash site id: " + p.site);
    }
    if (!problems.empty()) {
      std::string msg = "invalid configuration:";
      for (const std::string& p : problems) msg += "\n  - " + p;
      throw ConfigError(msg);
    }
    return cfg;
  }

  static DataManagerConfig dm_config(const SimConfig& cfg) {
    DataManagerConfig d;
    d.object_count = cfg.object_count;
    d.object_size = cfg.object_size;
    d.commit_map_width = cfg.commit_map_width;
    bool durable_commits = cfg.scheme == Scheme::Ours || cfg.scheme == Scheme::NaiveRerun;
    d.mode = durable_commits ? DurableMode::ShadowAtCommit : DurableMode::Deferred;
    d.capture_old_values = cfg.scheme == Scheme::Log;
    return d;
  }

  bool allow_lengthy() const { return cfg_.scheme == Scheme::Ours; }

  // ---- event-log plumbing ----

  void log_line(const char* ev, std::initializer_list<std::pair<const char*, std::string>> kv) {
    std::ostringstream os;
    os << "{\"t_us\":" << clock_.now_us << ",\"ev\":\"" << ev << '"';
    for (const auto& [k, v] : kv) {
      os << ",\"" << k << "\":";
      bool num = !v.empty() && (std::isdigit(static_cast<unsigned char>(v[0])) || v[0] == '-');
      for (char c : v) {
        if (!std::isdigit(static_cast<unsigned char>(c)) && c != '-') {
          num = false;
          break;
        }
      }
      if (num) {
        os << v;
      } else {
        os << '"' << v << '"';
      }
    }
    os << '}';
    std::string line = os.str();
    digest_ = fnv1a(digest_, line);
    if (cfg_.event_log) events_.push_back(std::move(line));
  }

  // ---- power integration glue ----

  double current_draw() const {
    if (!power_.device_on()) return 0.0;
    TaskUid r = kernel_.running();
    if (r == 0 || in_window_) return cfg_.power.idle_draw_w;
    const Task& t = kernel_.task(r);
    return cfg_.workloads.at(t.attrs.workload_idx).draw_w(t.region);
  }

  void accrue_progress(Micros span) {
    if (!power_.device_on() || in_window_) return;
    TaskUid r = kernel_.running();
    if (r == 0) return;
    Task& t = kernel_.task(r);
    Micros o = std::min(t.overhead_us, span);
    t.overhead_us -= o;
    span -= o;
    t.done_us += span;
    if (t.done_us > t.total_us) {
      throw LogicError("task progressed past completion: " + t.attrs.name);
    }
  }

  void fire_queue() {
    try {
      queue_.fire_due();
    } catch (const CrashSignal& cs) {
      on_crash(cs);
    }
  }

  void apply_power_transition() {
    PowerEventKind k = power_.apply_pending();
    switch (k) {
      case PowerEventKind::PowerOn:
        try {
          on_power_on();
        } catch (const CrashSignal& cs) {
          on_crash(cs);  // a crash during recovery publication
        }
        break;
      case PowerEventKind::PowerOff:
        on_power_off();
        break;
      case PowerEventKind::LowVoltage:
        on_low_voltage();
        break;
    }
  }

  void on_crash(const CrashSignal& cs) {
    ++metrics_.crash_injections;
    log_line("crash", {{"site", cs.site}, {"occ", std::to_string(cs.occurrence)}});
    power_.force_failure();
    on_power_off();
  }

  // ---- power events ----

  void on_low_voltage() {
    ++metrics_.lv_interrupts;
    bool armed = rec_.on_low_voltage(kernel_.any_lengthy_live());
    log_line("low_voltage", {{"act", armed ? "suspend_lengthy" : "none"}});
  }

  void on_power_off() {
    metrics_.recentness_ms.add(static_cast<double>(powered_us_ - last_durable_powered_us_) * 1e-3);
    ++metrics_.power_failure_count;
    log_line("power_off", {{"ctx", std::to_string(clock_.ctx_switch_count)}});
    cancel_device_events();
    auto survivors = kernel_.on_power_failure();
    mem_.on_power_failure();
    dm_.on_power_failure(survivors);
    for (auto& r : wal_) r.alloc = 0;  // buffered records were VM
    wal_.clear();
    wal_bytes_ = 0;
    rec_.clear_lv();
    in_window_ = false;
  }

  void on_power_on() {
    ++metrics_.power_on_count;
    ++metrics_.recoveries;
    log_line("power_on", {{"ctx", std::to_string(clock_.ctx_switch_count)}});
    Micros cost = 0;
    switch (cfg_.scheme) {
      case Scheme::Ours:
      case Scheme::NaiveRerun:
        cost = cfg_.costs.recovery_fixed_us +
               cfg_.costs.recovery_per_task_us * rec_.unfinished().size();
        resume_unfinished();
        break;
      case Scheme::Sys:
        cost = cfg_.costs.sys_recover_us;
        restore_world(slot_active_ >= 0 ? slots_[slot_active_]->world : initial_world_);
        break;
      case Scheme::Log:
        cost = cfg_.costs.log_recover_us;
        if (slot_active_ >= 0) {
          log_recover(*slots_[slot_active_]);
        } else {
          restore_world(initial_world_);
        }
        break;
    }
    metrics_.recovery_ms.add(static_cast<double>(cost) * 1e-3);
    log_line("recovered", {{"cost_us", std::to_string(cost)},
                           {"fin", std::to_string(counters_.finished_total)},
                           {"unfinished", std::to_string(rec_.unfinished().size())}});
    ensure_live();
    tick_ev_ = queue_.schedule(clock_.now_us + cost, EventClass::Scheduler, "tick",
                               [this] { on_tick(); });
    if (cfg_.scheme == Scheme::Sys || cfg_.scheme == Scheme::Log) {
      ckpt_ev_ = queue_.schedule(clock_.now_us + cost + cfg_.checkpoint_period_us,
                                 EventClass::Interrupt, "checkpoint_timer",
                                 [this] { on_ckpt_timer(); });
    }
  }

  void resume_unfinished() {
    auto plan = rec_.plan_resume(allow_lengthy(),
                                 [this](TaskUid uid) { return kernel_.exists(uid); });
    metrics_.resume_ops += rec_.last_resume_ops();
    for (const ResumeAction& a : plan) {
      TaskRecord& r = rec_.record(a.rec);
      switch (a.kind) {
        case ResumeKind::ResumeLive:
          kernel_.resume(a.uid);
          log_line("resume", {{"rec", std::to_string(a.rec)},
                              {"done_us", std::to_string(kernel_.task(a.uid).done_us)}});
          break;
        case ResumeKind::RecreateLengthy:
          if (a.newly_lengthy) {
            ++metrics_.lengthy_detections;
            log_line("lengthy", {{"rec", std::to_string(a.rec)}, {"name", r.name}});
          }
          spawn_instance(a.rec, true, false);
          break;
        case ResumeKind::RecreateFresh:
          spawn_instance(a.rec, false, false);
          break;
      }
    }
  }

  // ---- scheduling ----

  void cancel_device_events() {
    queue_.cancel(tick_ev_);
    queue_.cancel(milestone_ev_);
    queue_.cancel(window_ev_);
    queue_.cancel(ckpt_ev_);
    tick_ev_ = milestone_ev_ = window_ev_ = ckpt_ev_ = 0;
    for (EventId id : respawn_evs_) queue_.cancel(id);
    respawn_evs_.clear();
  }

  void cancel_milestone() {
    queue_.cancel(milestone_ev_);
    milestone_ev_ = 0;
  }

  void on_tick() {
    tick_ev_ = 0;
    if (!power_.device_on() || in_window_) return;
    if (cfg_.scheme == Scheme::Log && wal_pressure()) {
      begin_window();
      return;  // scheduling resumes when the flush window closes
    }
    kernel_.preempt();
    cancel_milestone();
    if (rec_.lv_flag()) {
      for (TaskUid uid : kernel_.lengthy_ready()) {
        kernel_.suspend(uid);
        ++metrics_.suspensions_lv;
        log_line("suspend_lengthy", {{"task", std::to_string(uid)}});
      }
    }
    TaskUid next = kernel_.schedule_next();
    if (next != 0) schedule_milestone(next);
    tick_ev_ = queue_.schedule(clock_.now_us + cfg_.tick_period_us, EventClass::Scheduler,
                               "tick", [this] { on_tick(); });
  }

  void schedule_milestone(TaskUid uid) {
    Task& t = kernel_.task(uid);
    Micros target = t.total_us;
    if (!t.commit_pending && t.next_step < t.steps.size()) {
      target = t.steps[t.next_step].offset_us;
    }
    Micros eta = clock_.now_us + t.overhead_us + (target - t.done_us);
    milestone_ev_ = queue_.schedule(eta, EventClass::TaskWork, "milestone",
                                    [this, uid] { on_milestone(uid); });
  }

  void on_milestone(TaskUid uid) {
    milestone_ev_ = 0;
    if (!power_.device_on() || in_window_ || kernel_.running() != uid) return;
    Task& t = kernel_.task(uid);

    while (!t.commit_pending && t.next_step < t.steps.size() &&
           t.steps[t.next_step].offset_us == t.done_us) {
      const BoundStep st = t.steps[t.next_step++];
      if (st.kind == AccessKind::Read) {
        DmReadResult rr = dm_.dm_read(uid, st.obj);
        t.overhead_us += cfg_.costs.read_us;
        if (rr.abort) {
          ++metrics_.aborts_early;
          abort_instance(uid, "early");
          resume_slice();
          return;
        }
      } else {
        dm_.dm_write(uid, st.obj, next_write_payload(t, st.obj));
        t.overhead_us += cfg_.costs.write_us;
        if (dm_.early_abort_check(uid)) {
          ++metrics_.aborts_early;
          abort_instance(uid, "early");
          resume_slice();
          return;
        }
      }
    }

    if (t.next_step >= t.steps.size() && t.done_us == t.total_us) {
      if (!t.commit_pending && cfg_.costs.commit_us > 0) {
        t.commit_pending = true;
        t.overhead_us += cfg_.costs.commit_us;
        schedule_milestone(uid);
        return;
      }
      do_commit(uid);
      resume_slice();
      return;
    }
    schedule_milestone(uid);
  }

  void do_commit(TaskUid uid) {
    const Task& t = kernel_.task(uid);
    const RecordId rec_id = t.record;
    const std::size_t widx = t.attrs.workload_idx;
    const Workload& w = cfg_.workloads.at(widx);

    const TxnState& txn = dm_.txn(uid);
    std::vector<ObjectId> distinct;
    for (const ReadAction& r : txn.reads) {
      if (std::find(distinct.begin(), distinct.end(), r.obj) == distinct.end()) {
        distinct.push_back(r.obj);
      }
    }
    for (const WriteAction& wr : txn.writes) {
      if (std::find(distinct.begin(), distinct.end(), wr.obj) == distinct.end()) {
        distinct.push_back(wr.obj);
      }
    }
    const std::uint64_t n_objs = distinct.size();
    const std::uint64_t m_overlap = dm_.overlap_count(uid);

    CommitResult res = dm_.dm_commit(uid);  // a CrashSignal unwinds to the main loop

    ++metrics_.validate_calls;
    const std::uint64_t c = dm_.last_validate_comparisons();
    metrics_.validate_comparisons_total += c;
    metrics_.validate_comparisons_max = std::max(metrics_.validate_comparisons_max, c);
    if (c > 2 * (n_objs + m_overlap) + 8) metrics_.validate_bound_ok = false;

    if (res.committed) {
      ++metrics_.commits;
      counters_.bump(w.name, w.long_running);
      log_line("commit", {{"task", std::to_string(uid)},
                          {"rec", std::to_string(rec_id)},
                          {"name", w.name},
                          {"b", std::to_string(res.interval.begin)},
                          {"e", std::to_string(res.interval.end)}});
      kernel_.kill(uid);
      rec_.set_live(rec_id, 0);
      for (TaskUid victim : res.early_aborted) {
        ++metrics_.aborts_early;
        abort_instance(victim, "early");
      }
      if (w.repeat) respawn_lineage(rec_id, widx);
    } else {
      ++metrics_.aborts_validation;
      log_line("abort_validation", {{"task", std::to_string(uid)},
                                    {"rec", std::to_string(rec_id)},
                                    {"b", std::to_string(res.interval.begin)},
                                    {"e", std::to_string(res.interval.end)}});
      abort_instance(uid, "validation");
    }
  }

  void abort_instance(TaskUid uid, const char* cause) {
    const Task& t = kernel_.task(uid);
    const RecordId rec_id = t.record;
    const bool was_suspended = t.status == TaskStatus::Suspended;
    log_line("abort", {{"task", std::to_string(uid)},
                       {"rec", std::to_string(rec_id)},
                       {"cause", cause}});
    kernel_.kill(uid);
    dm_.drop_task(uid);
    TaskRecord& r = rec_.record(rec_id);
    r.live_uid = 0;
    const bool lengthy = r.lengthy && allow_lengthy();
    spawn_instance(rec_id, lengthy,
                   was_suspended || (lengthy && rec_.lv_flag()));
  }

  void resume_slice() {
    if (!power_.device_on() || in_window_) return;
    if (kernel_.running() != 0) return;
    TaskUid next = kernel_.schedule_next();
    if (next != 0) schedule_milestone(next);
  }

  TaskUid spawn_instance(RecordId rec_id, bool lengthy, bool start_suspended) {
    TaskRecord& r = rec_.record(rec_id);
    const Workload& w = cfg_.workloads.at(r.workload_idx);
    TaskAttributes attrs{r.name, r.workload_idx, cfg_.stack_bytes};
    Task& t = kernel_.create_task(rec_id, attrs, w, lengthy, start_suspended);
    rec_.set_live(rec_id, t.uid);
    dm_.begin_task(t.uid, rec_id, lengthy);
    log_line("spawn", {{"task", std::to_string(t.uid)},
                       {"rec", std::to_string(rec_id)},
                       {"name", r.name},
                       {"region", t.region == MemRegion::NVM ? "nvm" : "vm"}});
    return t.uid;
  }

  void respawn_lineage(RecordId old_rec, std::size_t widx) {
    rec_.gc_record(old_rec);
    RecordId nr = rec_.create_record(widx, cfg_.workloads.at(widx).name);
    Micros delay = cfg_.workloads.at(widx).respawn_delay_us;
    if (delay == 0) {
      spawn_instance(nr, false, false);
    } else {
      respawn_evs_.push_back(queue_.schedule(clock_.now_us + delay, EventClass::Scheduler,
                                             "respawn", [this, nr] {
                                               if (!power_.device_on()) return;
                                               spawn_instance(nr, false, false);
                                             }));
    }
  }

  // Every unfinished record gets a live instance; repeating workloads whose
  // lineage vanished get a fresh record. Stale finished records are reaped.
  void ensure_live() {
    std::vector<RecordId> unf = rec_.unfinished();
    for (RecordId id : unf) {
      TaskRecord& r = rec_.record(id);
      if (r.live_uid == 0 || !kernel_.exists(r.live_uid)) {
        spawn_instance(id, r.lengthy && allow_lengthy(), false);
      }
    }
    for (std::size_t i = 0; i < cfg_.workloads.size(); ++i) {
      if (!cfg_.workloads[i].repeat) continue;
      bool has = false;
      for (RecordId id : rec_.unfinished()) {
        if (rec_.record(id).workload_idx == i) {
          has = true;
          break;
        }
      }
      if (!has) {
        RecordId nr = rec_.create_record(i, cfg_.workloads[i].name);
        spawn_instance(nr, false, false);
      }
    }
    std::vector<RecordId> stale;
    for (const auto& [id, r] : rec_.core().records) {
      if (r.finished && cfg_.workloads.at(r.workload_idx).repeat) stale.push_back(id);
    }
    for (RecordId id : stale) rec_.gc_record(id);
  }

  // ---- write payloads ----

  Bytes next_write_payload(Task& t, ObjectId obj) {
    // Reruns of the same logical task must write identical bytes.
    std::uint64_t key = fnv1a_init();
    key = fnv1a(key, &cfg_.seed, sizeof cfg_.seed);
    key = fnv1a(key, &t.record, sizeof t.record);
    key = fnv1a(key, &obj, sizeof obj);
    key = fnv1a(key, &t.write_count, sizeof t.write_count);
    ++t.write_count;
    return deterministic_bytes(key, cfg_.object_size);
  }

  // ---- checkpointing baselines ----

  bool wal_pressure() const {
    const Region& vm = mem_.region(MemRegion::VM);
    return vm.used_bytes * 4 > vm.capacity_bytes * 3;
  }

  void append_log_record(TaskUid uid, RecordId rec_id, ObjectId obj, const Bytes& oldv,
                         const Bytes& newv) {
    LogRecord r;
    r.seq = ++wal_seq_;
    r.rec = rec_id;
    r.task = uid;
    r.obj = obj;
    r.old_value = oldv;
    r.new_value = newv;
    r.ts = clock_.ctx_switch_count;
    std::size_t sz = oldv.size() + newv.size() + 32;
    r.alloc = mem_.allocate(MemRegion::VM, sz, "log_record", uid);
    wal_bytes_ += sz;
    wal_.push_back(std::move(r));
  }

  void on_ckpt_timer() {
    ckpt_ev_ = 0;
    if (!power_.device_on() || in_window_) return;
    begin_window();
  }

  void begin_window() {
    in_window_ = true;
    kernel_.preempt();
    cancel_milestone();
    queue_.cancel(tick_ev_);
    tick_ev_ = 0;
    Micros dur =
        cfg_.scheme == Scheme::Sys ? cfg_.costs.sys_suspend_us : cfg_.costs.log_suspend_us;
    metrics_.suspension_ms.add(static_cast<double>(dur) * 1e-3);
    log_line("window_begin", {{"dur_us", std::to_string(dur)}});
    window_ev_ = queue_.schedule(clock_.now_us + dur, EventClass::Interrupt, "window_done",
                                 [this] { on_window_done(); });
  }

  void on_window_done() {
    window_ev_ = 0;
    if (cfg_.scheme == Scheme::Sys) {
      do_sys_checkpoint();  // CrashSignal unwinds with the window still open
    } else {
      do_log_flush();
    }
    in_window_ = false;
    ++metrics_.checkpoints;
    last_durable_powered_us_ = powered_us_;
    tick_ev_ = queue_.schedule(clock_.now_us, EventClass::Scheduler, "tick", [this] { on_tick(); });
    ckpt_ev_ = queue_.schedule(clock_.now_us + cfg_.checkpoint_period_us, EventClass::Interrupt,
                               "checkpoint_timer", [this] { on_ckpt_timer(); });
  }

  WorldSnapshot capture_world() const {
    return WorldSnapshot{mem_,
                         dm_.snapshot_core(),
                         kernel_.snapshot_core(),
                         rec_.snapshot_core(),
                         counters_,
                         clock_.ctx_switch_count,
                         0};
  }

  void restore_world(const WorldSnapshot& w) {
    mem_ = w.mem;
    dm_.restore_core(w.dm);
    kernel_.restore_core(w.kernel);
    rec_.restore_core(w.recovery);
    counters_ = w.counters;
    clock_.ctx_switch_count = w.ctx;
  }

  void do_sys_checkpoint() {
    for (std::size_t i = 0; i < kernel_.live_count(); ++i) crash_.hit("sys.snapshot.chunk");
    for (std::size_t i = 0; i < dm_.object_count(); ++i) crash_.hit("sys.snapshot.chunk");
    LogImage img;
    img.world = capture_world();
    img.bytes = modeled_image_bytes(img);
    if (img.bytes > slot_budget_) {
      throw MemoryError("snapshot image exceeds its slot: " + std::to_string(img.bytes) +
                        " > " + std::to_string(slot_budget_));
    }
    crash_.hit("sys.snapshot.publish");
    int next = slot_active_ == 0 ? 1 : 0;
    slots_[next] = std::move(img);
    slot_active_ = next;
    log_line("checkpoint", {{"bytes", std::to_string(slots_[next]->bytes)},
                            {"fin", std::to_string(counters_.finished_total)}});
  }

  void do_log_flush() {
    LogImage img;
    // Data dump: the committed view of every object, then the raw working
    // copies of whatever is still in flight, in task order.
    for (ObjectId o = 0; o < dm_.object_count(); ++o) {
      crash_.hit("log.flush.chunk");
      img.raw[o] = dm_.committed_bytes(o);
    }
    std::uint64_t useq = 0;
    for (TaskUid uid : dm_.live_txns()) {
      const TxnState& txn = dm_.txn(uid);
      for (const WriteAction& wr : txn.writes) {
        crash_.hit("log.flush.chunk");
        const WorkingCopy& wc = txn.working.at(wr.obj);
        LogRecord u;
        u.seq = ++useq;
        u.rec = txn.record;
        u.task = uid;
        u.obj = wr.obj;
        u.old_value = dm_.committed_bytes(wr.obj);  // flush-consistent before-image
        u.new_value = wc.bytes;
        u.ts = wr.at;
        img.raw[wr.obj] = wc.bytes;
        img.undo.push_back(std::move(u));
      }
    }
    for (const LogRecord& r : wal_) {
      crash_.hit("log.flush.chunk");
      img.redo.push_back(r);
    }
    img.world = capture_world();
    img.bytes = modeled_image_bytes(img);
    if (img.bytes > slot_budget_) {
      throw MemoryError("flush image exceeds its slot: " + std::to_string(img.bytes) + " > " +
                        std::to_string(slot_budget_));
    }
    crash_.hit("log.flush.publish");
    int next = slot_active_ == 0 ? 1 : 0;
    slots_[next] = std::move(img);
    slot_active_ = next;
    // The buffered log drains into the image; its VM space is released.
    for (const LogRecord& r : wal_) {
      if (r.alloc != 0 && mem_.alive(r.alloc)) mem_.free(r.alloc);
    }
    wal_.clear();
    wal_bytes_ = 0;
    log_line("flush", {{"bytes", std::to_string(slots_[next]->bytes)},
                       {"redo", std::to_string(slots_[next]->redo.size())},
                       {"undo", std::to_string(slots_[next]->undo.size())},
                       {"fin", std::to_string(counters_.finished_total)}});
  }

  std::uint64_t modeled_image_bytes(const LogImage& img) const {
    std::uint64_t b = img.world.mem.region(MemRegion::VM).used_bytes;
    b += dm_.object_count() * cfg_.object_size;
    b += img.world.recovery.records.size() * kTaskRecordBytes;
    for (const LogRecord& r : img.redo) b += r.old_value.size() + r.new_value.size() + 32;
    for (const LogRecord& r : img.undo) b += r.old_value.size() + r.new_value.size() + 32;
    b += 512;  // maps, intervals, counters
    return b;
  }

  // Repeat committed history, then roll uncommitted writes back to their
  // flush-consistent before-images; publish the repaired persistent state.
  void log_recover(const LogImage& img) {
    crash_.hit("log.recover.publish");
    restore_world(img.world);
    mem_.on_power_failure();   // the flush-time VM does not come back
    dm_.on_power_failure({});  // no transaction outlives a failure here
    kernel_.reset();
    std::map<ObjectId, Bytes> repaired = img.raw;
    for (const LogRecord& r : img.redo) repaired[r.obj] = r.new_value;
    for (auto it = img.undo.rbegin(); it != img.undo.rend(); ++it) {
      repaired[it->obj] = it->old_value;
    }
    for (const auto& [obj, bytes] : repaired) dm_.poke_persistent(obj, bytes);
    log_line("log_recovered", {{"redo", std::to_string(img.redo.size())},
                               {"undo", std::to_string(img.undo.size())}});
  }

  // ---- members ----

  SimConfig cfg_;
  SimClock clock_{};
  EventQueue queue_;
  MemoryModel mem_;
  CrashInjector crash_;
  PowerModel power_;
  DataManager dm_;
  Kernel kernel_;
  RecoveryHandler rec_;

  Metrics metrics_{};
  ProgressCounters counters_{};
  std::vector<std::string> events_;
  std::uint64_t digest_ = fnv1a_init();

  WorldSnapshot initial_world_{};
  std::optional<LogImage> slots_[2];
  int slot_active_ = -1;
  AllocId slot_alloc_[2] = {0, 0};
  std::uint64_t slot_budget_ = 0;

  std::vector<LogRecord> wal_;
  std::uint64_t wal_seq_ = 0;
  std::uint64_t wal_bytes_ = 0;

  EventId tick_ev_ = 0;
  EventId milestone_ev_ = 0;
  EventId window_ev_ = 0;
  EventId ckpt_ev_ = 0;
  std::vector<EventId> respawn_evs_;

  bool in_window_ = false;
  Micros powered_us_ = 0;
  Micros last_durable_powered_us_ = 0;
};

}  // namespace ifsim
