#pragma once

#include <algorithm>
#include <deque>
#include <map>
#include <string>
#include <vector>

#include "ifsim/common.hpp"
#include "ifsim/event_queue.hpp"
#include "ifsim/memory.hpp"
#include "ifsim/workloads.hpp"

namespace ifsim {

enum class TaskStatus { Ready, Running, Suspended, Dead };

inline const char* to_string(TaskStatus s) {
  switch (s) {
    case TaskStatus::Ready: return "ready";
    case TaskStatus::Running: return "running";
    case TaskStatus::Suspended: return "suspended";
    case TaskStatus::Dead: return "dead";
  }
  return "?";
}

struct TaskAttributes {
  std::string name;
  std::size_t workload_idx = 0;
  std::size_t stack_bytes = 256;
};

// One task instance. A lengthy task keeps its context (stack, registers,
// progress) in NVM and can survive power failures; everything else is VM.
struct Task {
  TaskUid uid = 0;
  RecordId record = 0;
  TaskAttributes attrs;
  bool lengthy = false;
  MemRegion region = MemRegion::VM;
  Micros total_us = 0;
  Micros done_us = 0;
  Micros overhead_us = 0;  // pending access/commit latency, consumed before progress
  std::vector<BoundStep> steps;
  std::size_t next_step = 0;
  bool commit_pending = false;
  std::uint64_t write_count = 0;  // distinct payloads per instance
  TaskStatus status = TaskStatus::Ready;
  AllocId stack_alloc = 0;
  Timestamp created_ctx = 0;
  // Set while the task is switched out; the instant a power failure hits, the
  // running task's registers are lost and its context is unusable.
  bool context_saved = true;
};

struct KernelCore {
  std::map<TaskUid, Task> tasks;
  std::deque<TaskUid> ready;
  TaskUid running = 0;
  TaskUid next_uid = 1;
};

class Kernel {
 public:
  Kernel(SimClock& clock, MemoryModel& mem) : clock_(clock), mem_(mem) {}

  const KernelCore& core() const { return core_; }
  KernelCore snapshot_core() const { return core_; }
  void restore_core(const KernelCore& c) { core_ = c; }
  void reset() { core_ = KernelCore{}; }

  bool exists(TaskUid uid) const { return core_.tasks.count(uid) > 0; }
  Task& task(TaskUid uid) { return core_.tasks.at(uid); }
  const Task& task(TaskUid uid) const { return core_.tasks.at(uid); }
  TaskUid running() const { return core_.running; }
  std::size_t live_count() const { return core_.tasks.size(); }

  Task& create_task(RecordId rec, const TaskAttributes& attrs, const Workload& w,
                    bool lengthy, bool start_suspended) {
    Task t;
    t.uid = core_.next_uid++;
    t.record = rec;
    t.attrs = attrs;
    t.lengthy = lengthy;
    t.region = lengthy ? MemRegion::NVM : MemRegion::VM;
    t.total_us = w.duration_us(t.region);
    t.steps = bind_script(w, t.region);
    t.status = start_suspended ? TaskStatus::Suspended : TaskStatus::Ready;
    t.created_ctx = clock_.ctx_switch_count;
    t.stack_alloc = mem_.allocate(t.region, attrs.stack_bytes, "stack", t.uid);
    auto [it, ok] = core_.tasks.emplace(t.uid, std::move(t));
    if (!start_suspended) core_.ready.push_back(it->first);
    return it->second;
  }

  // Switches the running task out: registers saved, back of the ready queue.
  void preempt() {
    if (core_.running == 0) return;
    Task& t = core_.tasks.at(core_.running);
    t.status = TaskStatus::Ready;
    t.context_saved = true;
    core_.ready.push_back(core_.running);
    core_.running = 0;
  }

  // Round-robin pick. Every invocation advances the persisted context-switch
  // counter, which doubles as the logical timestamp for validity intervals.
  TaskUid schedule_next() {
    ++clock_.ctx_switch_count;
    while (!core_.ready.empty()) {
      TaskUid uid = core_.ready.front();
      core_.ready.pop_front();
      auto it = core_.tasks.find(uid);
      if (it == core_.tasks.end() || it->second.status != TaskStatus::Ready) continue;
      it->second.status = TaskStatus::Running;
      it->second.context_saved = false;
      core_.running = uid;
      return uid;
    }
    core_.running = 0;
    return 0;
  }

  void suspend(TaskUid uid) {
    Task& t = core_.tasks.at(uid);
    if (t.status == TaskStatus::Running) throw LogicError("suspend of the running task");
    if (t.status == TaskStatus::Ready) {
      auto& q = core_.ready;
      q.erase(std::remove(q.begin(), q.end(), uid), q.end());
    }
    t.status = TaskStatus::Suspended;
  }

  void resume(TaskUid uid) {
    Task& t = core_.tasks.at(uid);
    if (t.status != TaskStatus::Suspended) return;
    t.status = TaskStatus::Ready;
    core_.ready.push_back(uid);
  }

  // Finish and abort share the teardown; the transaction side is the caller's.
  void kill(TaskUid uid) {
    auto it = core_.tasks.find(uid);
    if (it == core_.tasks.end()) return;
    Task& t = it->second;
    if (t.stack_alloc != 0 && mem_.alive(t.stack_alloc)) mem_.free(t.stack_alloc);
    if (core_.running == uid) core_.running = 0;
    auto& q = core_.ready;
    q.erase(std::remove(q.begin(), q.end(), uid), q.end());
    core_.tasks.erase(it);
  }

  std::vector<TaskUid> lengthy_ready() const {
    std::vector<TaskUid> out;
    for (TaskUid uid : core_.ready) {
      if (core_.tasks.at(uid).lengthy) out.push_back(uid);
    }
    return out;
  }

  bool any_lengthy_live() const {
    for (const auto& [uid, t] : core_.tasks) {
      if (t.lengthy && t.status != TaskStatus::Dead) return true;
    }
    return false;
  }

  // Power failure: VM contexts evaporate, and so does the running task's
  // (registers were live). Lengthy tasks that were switched out survive with
  // their NVM contexts intact and wait, suspended, for the next period.
  std::vector<TaskUid> on_power_failure() {
    std::vector<TaskUid> survivors;
    std::vector<TaskUid> gone;
    for (auto& [uid, t] : core_.tasks) {
      if (t.lengthy && t.context_saved) {
        t.status = TaskStatus::Suspended;
        survivors.push_back(uid);
      } else {
        gone.push_back(uid);
      }
    }
    for (TaskUid uid : gone) {
      Task& t = core_.tasks.at(uid);
      // NVM stacks of dead lengthy tasks are reclaimed; VM ones are wiped with
      // the region and only need to be dropped from the accounting here.
      if (t.region == MemRegion::NVM && t.stack_alloc != 0 && mem_.alive(t.stack_alloc)) {
        mem_.free(t.stack_alloc);
      }
      core_.tasks.erase(uid);
    }
    core_.ready.clear();
    core_.running = 0;
    return survivors;
  }

 private:
  SimClock& clock_;
  MemoryModel& mem_;
  KernelCore core_;
};

}  // namespace ifsim
