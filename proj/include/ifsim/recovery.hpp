#pragma once

#include <algorithm>
#include <functional>
#include <map>
#include <string>
#include <vector>

#include "ifsim/common.hpp"
#include "ifsim/memory.hpp"

namespace ifsim {

inline constexpr std::size_t kTaskRecordBytes = 64;  // modeled NVM metadata cost

// NVM bookkeeping for one logical task. The record outlives instances: aborts
// and power failures recreate the instance, the record carries what was
// learned about it.
struct TaskRecord {
  RecordId id = 0;
  std::size_t workload_idx = 0;
  std::string name;
  bool finished = false;
  bool lengthy = false;
  // Set on the first power-failure rerun; a second failure while still
  // unfinished marks the record lengthy. Aborts do not count.
  bool ever_rerun = false;
  TaskUid live_uid = 0;
  ValidityInterval finish_interval;
  AllocId meta_alloc = 0;
};

struct RecoveryCore {
  std::map<RecordId, TaskRecord> records;
  std::vector<RecordId> unfinished;  // creation order
  RecordId next_id = 1;
};

enum class ResumeKind { ResumeLive, RecreateLengthy, RecreateFresh };

struct ResumeAction {
  RecordId rec = 0;
  ResumeKind kind = ResumeKind::RecreateFresh;
  TaskUid uid = 0;  // for ResumeLive
  bool newly_lengthy = false;
};

class RecoveryHandler {
 public:
  explicit RecoveryHandler(MemoryModel& mem) : mem_(mem) {}

  const RecoveryCore& core() const { return core_; }
  RecoveryCore snapshot_core() const { return core_; }
  void restore_core(const RecoveryCore& c) { core_ = c; }

  bool lv_flag() const { return lv_flag_; }
  void clear_lv() { lv_flag_ = false; }

  // Low-voltage interrupt: remember, for the remainder of this power-on
  // period, that lengthy tasks must be kept off the CPU. Without any lengthy
  // task the interrupt has nothing to do.
  bool on_low_voltage(bool any_lengthy_live) {
    lv_flag_ = any_lengthy_live;
    return lv_flag_;
  }

  std::uint64_t last_resume_ops() const { return last_resume_ops_; }

  bool has_record(RecordId id) const { return core_.records.count(id) > 0; }
  TaskRecord& record(RecordId id) { return core_.records.at(id); }
  const TaskRecord& record(RecordId id) const { return core_.records.at(id); }
  const std::vector<RecordId>& unfinished() const { return core_.unfinished; }

  RecordId create_record(std::size_t workload_idx, const std::string& name) {
    TaskRecord r;
    r.id = core_.next_id++;
    r.workload_idx = workload_idx;
    r.name = name;
    r.meta_alloc = mem_.allocate(MemRegion::NVM, kTaskRecordBytes, "task_record", 0);
    core_.unfinished.push_back(r.id);
    core_.records.emplace(r.id, std::move(r));
    return core_.next_id - 1;
  }

  void set_live(RecordId id, TaskUid uid) { core_.records.at(id).live_uid = uid; }

  // Invoked from inside the commit publication step, so the finished mark and
  // the committed data always land together.
  void mark_finished(RecordId id, const ValidityInterval& iv) {
    auto it = core_.records.find(id);
    if (it == core_.records.end()) return;
    it->second.finished = true;
    it->second.finish_interval = iv;
    it->second.live_uid = 0;
    auto& u = core_.unfinished;
    u.erase(std::remove(u.begin(), u.end(), id), u.end());
  }

  void gc_record(RecordId id) {
    auto it = core_.records.find(id);
    if (it == core_.records.end()) return;
    if (it->second.meta_alloc != 0 && mem_.alive(it->second.meta_alloc)) {
      mem_.free(it->second.meta_alloc);
    }
    auto& u = core_.unfinished;
    u.erase(std::remove(u.begin(), u.end(), id), u.end());
    core_.records.erase(it);
  }

  // Resume planning after a power failure. Walks only the unfinished records,
  // so the cost is linear in the number of unfinished tasks regardless of how
  // many have ever existed. `context_valid` reports whether a preserved
  // instance for the given uid survived with a usable context.
  std::vector<ResumeAction> plan_resume(bool allow_lengthy,
                                        const std::function<bool(TaskUid)>& context_valid) {
    std::vector<ResumeAction> plan;
    last_resume_ops_ = 0;
    for (RecordId id : core_.unfinished) {
      ++last_resume_ops_;
      TaskRecord& r = core_.records.at(id);
      ResumeAction a;
      a.rec = id;
      if (!allow_lengthy) {
        a.kind = ResumeKind::RecreateFresh;
      } else if (r.lengthy) {
        if (r.live_uid != 0 && context_valid(r.live_uid)) {
          a.kind = ResumeKind::ResumeLive;
          a.uid = r.live_uid;
        } else {
          a.kind = ResumeKind::RecreateLengthy;
        }
      } else if (r.ever_rerun) {
        // Second consecutive period without finishing: not worth rerunning
        // from volatile memory again.
        r.lengthy = true;
        a.kind = ResumeKind::RecreateLengthy;
        a.newly_lengthy = true;
      } else {
        r.ever_rerun = true;
        a.kind = ResumeKind::RecreateFresh;
      }
      plan.push_back(a);
    }
    return plan;
  }

 private:
  MemoryModel& mem_;
  RecoveryCore core_;
  bool lv_flag_ = false;
  std::uint64_t last_resume_ops_ = 0;
};

}  // namespace ifsim
