#pragma once

#include <algorithm>
#include <array>
#include <deque>
#include <functional>
#include <limits>
#include <map>
#include <optional>
#include <vector>

#include "ifsim/common.hpp"
#include "ifsim/crash.hpp"
#include "ifsim/event_queue.hpp"
#include "ifsim/memory.hpp"

namespace ifsim {

inline constexpr Timestamp kNoCap = std::numeric_limits<Timestamp>::max();
inline constexpr std::size_t kCommitEntryBytes = 48;  // modeled NVM metadata cost

enum class ReadSource { WorkingCopy, Temporary, Persistent };

inline const char* to_string(ReadSource s) {
  switch (s) {
    case ReadSource::WorkingCopy: return "working";
    case ReadSource::Temporary: return "temporary";
    case ReadSource::Persistent: return "persistent";
  }
  return "?";
}

// When data becomes durable. Shadow-slot publication at every commit is the
// failure-resilient design; deferred durability models the checkpointing
// baselines, where commits stay in VM until a checkpoint or log flush.
enum class DurableMode { ShadowAtCommit, Deferred };

struct ReadAction {
  ObjectId obj = 0;
  ValidityInterval snapshot;  // object interval when read
  std::uint64_t hist_cursor = 0;  // commits with index >= cursor happened after this read
  Timestamp at = 0;
};

struct WriteAction {
  ObjectId obj = 0;
  ValidityInterval snapshot;
  std::uint64_t hist_cursor = 0;
  Timestamp at = 0;
  Bytes old_value;  // committed bytes before this task's first write (log mode)
};

struct WorkingCopy {
  Bytes bytes;
  MemRegion region = MemRegion::VM;
  AllocId alloc = 0;
};

struct CommitEntry {
  std::uint64_t index = 0;  // position in the object's version chain
  TaskUid task = 0;
  RecordId record = 0;
  ValidityInterval interval;
  std::uint64_t commit_seq = 0;
  Timestamp commit_ts = 0;
  AllocId meta_alloc = 0;
};

// Per-task transaction state. For a lengthy task this lives in NVM alongside
// its context and survives power failures; otherwise it dies with the task.
struct TxnState {
  TaskUid uid = 0;
  RecordId record = 0;
  bool lengthy = false;
  Timestamp created_at = 0;
  // Maintained validity interval (early abortion): the begin is pushed up by
  // reads and writes as they happen; the end cap is lowered when another task
  // commits an object this one read.
  Timestamp run_begin = 0;
  Timestamp end_cap = kNoCap;
  bool abort_pending = false;
  std::vector<ReadAction> reads;
  std::vector<WriteAction> writes;  // first write per object only
  std::map<ObjectId, WorkingCopy> working;
  // Overlap accounting for the validation cost bound.
  std::uint64_t live_at_creation = 0;
  std::uint64_t created_seq = 0;
};

struct ObjMeta {
  ObjectId id = 0;
  ValidityInterval interval{0, 0};  // of the most recent committing task
  std::deque<CommitEntry> history;
  std::uint64_t hist_base = 0;  // index of history.front()
  // Highest serialization begin among finished tasks that read this object.
  // A later writer replaces the data those tasks saw, so it must serialize
  // after all of them; without this stamp two read-write tasks could slip
  // into disjoint intervals that each contradict the other's reads.
  Timestamp read_stamp = 0;
  bool temp_valid = false;
  Bytes temp_bytes;
  AllocId temp_alloc = 0;
  std::vector<TaskUid> live_readers;  // registration order
};

// Two address maps plus a W-bit bit map. Bit i selects which map holds the
// current persistent copy address of object i; a commit writes new addresses
// into the inactive map and then flips all modified bits in one atomic step.
struct CommitMapStructure {
  unsigned width = 16;
  std::uint16_t bit_map = 0;
  std::array<std::vector<AllocId>, 2> address_map;

  unsigned side(ObjectId o) const { return (bit_map >> o) & 1u; }
};

struct CommitResult {
  bool committed = false;
  ValidityInterval interval;
  std::vector<TaskUid> early_aborted;  // readers whose intervals became empty
};

struct DmReadResult {
  const Bytes* data = nullptr;
  ReadSource source = ReadSource::Persistent;
  bool abort = false;  // reader's own interval became empty
};

struct DataManagerConfig {
  std::size_t object_count = 5;
  std::size_t object_size = 64;
  unsigned commit_map_width = 16;
  std::vector<Bytes> init_values;  // optional, per object
  DurableMode mode = DurableMode::ShadowAtCommit;
  bool capture_old_values = false;  // write-ahead-log support
};

// Value-type core so checkpointing baselines can snapshot and restore it.
struct DmCore {
  std::vector<ObjMeta> objects;
  CommitMapStructure cmap;
  std::vector<AllocId> spare_alloc;         // next shadow destination per object
  std::map<AllocId, Bytes> nvm_data;        // persistent payloads by allocation
  std::map<TaskUid, TxnState> txns;
  std::uint64_t commit_seq = 0;
  std::uint64_t created_count = 0;
};

class DataManager {
 public:
  DataManager(const DataManagerConfig& cfg, SimClock& clock, MemoryModel& mem,
              CrashInjector& crash)
      : cfg_(cfg), clock_(clock), mem_(mem), crash_(crash) {
    if (cfg.commit_map_width > 16) {
      throw ConfigError("commit map width exceeds 16 bits");
    }
    if (cfg.object_count > cfg.commit_map_width) {
      throw ConfigError("object count " + std::to_string(cfg.object_count) +
                        " exceeds commit map width " + std::to_string(cfg.commit_map_width));
    }
    core_.cmap.width = cfg.commit_map_width;
    core_.cmap.address_map[0].resize(cfg.object_count, 0);
    core_.cmap.address_map[1].resize(cfg.object_count, 0);
    core_.spare_alloc.resize(cfg.object_count, 0);
    core_.objects.resize(cfg.object_count);
    for (std::size_t i = 0; i < cfg.object_count; ++i) {
      ObjMeta& m = core_.objects[i];
      m.id = static_cast<ObjectId>(i);
      Bytes init(cfg.object_size, 0);
      if (i < cfg.init_values.size() && !cfg.init_values[i].empty()) {
        init = cfg.init_values[i];
        init.resize(cfg.object_size, 0);
      }
      AllocId active = mem_.allocate(MemRegion::NVM, cfg.object_size, "persistent", 0);
      AllocId spare = mem_.allocate(MemRegion::NVM, cfg.object_size, "persistent", 0);
      core_.nvm_data[active] = std::move(init);
      core_.nvm_data[spare] = Bytes(cfg.object_size, 0);
      core_.cmap.address_map[0][i] = active;
      core_.cmap.address_map[1][i] = active;
      core_.spare_alloc[i] = spare;
    }
  }

  const DataManagerConfig& config() const { return cfg_; }
  std::size_t object_count() const { return core_.objects.size(); }
  const ObjMeta& object(ObjectId o) const { return core_.objects.at(o); }
  const CommitMapStructure& commit_map() const { return core_.cmap; }
  std::uint64_t commit_seq() const { return core_.commit_seq; }

  bool has_txn(TaskUid uid) const { return core_.txns.count(uid) > 0; }
  const TxnState& txn(TaskUid uid) const { return core_.txns.at(uid); }

  // Overlap count for the validation cost bound: tasks live when this one was
  // created plus tasks created during its lifetime.
  std::uint64_t overlap_count(TaskUid uid) const {
    const TxnState& t = core_.txns.at(uid);
    return t.live_at_creation + (core_.created_count - t.created_seq);
  }

  std::uint64_t last_validate_comparisons() const { return last_validate_comparisons_; }

  // Simulator hooks, invoked from inside the atomic publication step.
  std::function<void(RecordId, const ValidityInterval&)> on_finished;
  std::function<void()> on_durable_update;
  std::function<void(TaskUid, RecordId, ObjectId, const Bytes&, const Bytes&)> on_commit_write;

  void begin_task(TaskUid uid, RecordId rec, bool lengthy) {
    if (core_.txns.count(uid) > 0) throw LogicError("begin_task: txn already exists");
    TxnState t;
    t.uid = uid;
    t.record = rec;
    t.lengthy = lengthy;
    t.created_at = clock_.ctx_switch_count;
    t.run_begin = clock_.ctx_switch_count;  // a task cannot serialize before it exists
    t.live_at_creation = core_.txns.size();
    t.created_seq = ++core_.created_count;
    core_.txns.emplace(uid, std::move(t));
  }

  // Drops a task's transaction state and working copies (abort or finish).
  void drop_task(TaskUid uid) {
    auto it = core_.txns.find(uid);
    if (it == core_.txns.end()) return;
    for (auto& [obj, wc] : it->second.working) {
      if (wc.alloc != 0 && mem_.alive(wc.alloc)) mem_.free(wc.alloc);
    }
    for (const ReadAction& r : it->second.reads) {
      unregister_reader(r.obj, uid);
    }
    core_.txns.erase(it);
  }

  DmReadResult dm_read(TaskUid uid, ObjectId obj) {
    TxnState& t = core_.txns.at(uid);
    ObjMeta& m = core_.objects.at(obj);
    DmReadResult res;

    if (auto wit = t.working.find(obj); wit != t.working.end()) {
      // Read-your-writes: the task sees its own uncommitted data.
      res.data = &wit->second.bytes;
      res.source = ReadSource::WorkingCopy;
      return res;  // no snapshot recorded; this is not a read of committed state
    }

    if (m.temp_valid) {
      res.data = &m.temp_bytes;
      res.source = ReadSource::Temporary;
    } else {
      const Bytes& persistent = persistent_bytes(obj);
      refresh_temporary(m, persistent);
      res.data = &m.temp_bytes;
      res.source = ReadSource::Persistent;
    }

    t.reads.push_back(ReadAction{obj, m.interval, m.hist_base + m.history.size(),
                                 clock_.ctx_switch_count});
    register_reader(m, uid);
    t.run_begin = std::max(t.run_begin, m.interval.begin + 1);
    if (interval_empty(t)) {
      t.abort_pending = true;
      res.abort = true;
    }
    return res;
  }

  void dm_write(TaskUid uid, ObjectId obj, const Bytes& value) {
    TxnState& t = core_.txns.at(uid);
    ObjMeta& m = core_.objects.at(obj);
    auto wit = t.working.find(obj);
    if (wit == t.working.end()) {
      // Copy-on-write: the first write creates the task's private copy.
      WriteAction wa{obj, m.interval, m.hist_base + m.history.size(),
                     clock_.ctx_switch_count, {}};
      if (cfg_.capture_old_values) wa.old_value = committed_bytes(obj);
      t.writes.push_back(std::move(wa));
      WorkingCopy wc;
      wc.region = t.lengthy ? MemRegion::NVM : MemRegion::VM;
      wc.alloc = mem_.allocate(wc.region, cfg_.object_size, "working_copy", uid);
      wc.bytes = value;
      wc.bytes.resize(cfg_.object_size, 0);
      wit = t.working.emplace(obj, std::move(wc)).first;
      t.run_begin = std::max(t.run_begin, m.interval.begin + 1);
      if (interval_empty(t)) t.abort_pending = true;
    } else {
      wit->second.bytes = value;
      wit->second.bytes.resize(cfg_.object_size, 0);
    }
  }

  // Backward validation at commit time. The read side has been maintained
  // incrementally (run_begin / end_cap), so only the write side is resolved
  // here: each first write must serialize after the object's latest finished
  // writer and after every finished reader of the data it replaces.
  ValidityInterval validate(TaskUid uid) {
    TxnState& t = core_.txns.at(uid);
    std::uint64_t comparisons = 0;

    Timestamp begin = t.run_begin;
    ++comparisons;
    Timestamp end = std::min(t.end_cap, clock_.ctx_switch_count);

    for (const WriteAction& w : t.writes) {
      const ObjMeta& m = core_.objects.at(w.obj);
      ++comparisons;
      Timestamp floor = m.read_stamp;
      bool advanced = !m.history.empty() && m.hist_base + m.history.size() > w.hist_cursor;
      if (advanced) floor = std::max(floor, m.history.back().interval.begin);
      if (advanced || m.read_stamp > 0) {
        // Object was read or modified by a finished task; order behind it.
        ++comparisons;
        begin = std::max(begin, floor + 1);
      }
    }
    ++comparisons;  // final begin <= end test
    last_validate_comparisons_ = comparisons;
    return ValidityInterval{begin, end};
  }

  // Early-abortion check: true when the maintained interval is already empty
  // and the task cannot possibly commit.
  bool early_abort_check(TaskUid uid) const {
    const TxnState& t = core_.txns.at(uid);
    return t.abort_pending || interval_empty(t);
  }

  ValidityInterval maintained_interval(const TxnState& t) const {
    return ValidityInterval{t.run_begin, std::min(t.end_cap, clock_.ctx_switch_count)};
  }

  CommitResult dm_commit(TaskUid uid) {
    TxnState& t = core_.txns.at(uid);
    CommitResult res;
    ValidityInterval iv = validate(uid);
    if (t.abort_pending || !iv.valid()) {
      res.committed = false;
      res.interval = iv;
      return res;
    }

    std::vector<ObjectId> modified;
    modified.reserve(t.writes.size());
    for (const WriteAction& w : t.writes) modified.push_back(w.obj);

    if (cfg_.mode == DurableMode::ShadowAtCommit) {
      // Stage new persistent addresses in the inactive map slots. A crash
      // anywhere in here leaves the active map untouched.
      for (ObjectId obj : modified) {
        WorkingCopy& wc = t.working.at(obj);
        AllocId staged;
        if (t.lengthy) {
          // NVM working copy becomes the new persistent copy without copying.
          staged = wc.alloc;
        } else {
          crash_.hit("commit.shadow_copy");
          staged = core_.spare_alloc.at(obj);
          core_.nvm_data.at(staged) = wc.bytes;
        }
        crash_.hit("commit.map_write");
        core_.cmap.address_map[1 - core_.cmap.side(obj)][obj] = staged;
      }
    }

    publish(t, iv, modified, res);
    res.committed = true;
    res.interval = iv;
    drop_task(uid);
    return res;
  }

  // The atomic publication step: flips the modified objects' bits in the bit
  // map with one micro-step, folding in the finished mark and the validation
  // metadata updates so recovery never observes them out of sync.
  void atomic_commit_apply(TaskUid uid, const std::vector<ObjectId>& modified) {
    TxnState& t = core_.txns.at(uid);
    ValidityInterval iv = validate(uid);
    if (!iv.valid()) throw LogicError("atomic_commit_apply on task with empty interval");
    CommitResult res;
    publish(t, iv, modified, res);
  }

  // Power failure: VM contents are gone. Temporaries become invalid, and the
  // transaction state of every task that did not survive dies with it.
  void on_power_failure(const std::vector<TaskUid>& surviving) {
    for (ObjMeta& m : core_.objects) {
      m.temp_valid = false;
      m.temp_bytes.clear();
      m.temp_alloc = 0;  // allocation already wiped by the memory model
    }
    std::vector<TaskUid> dead;
    for (auto& [uid, t] : core_.txns) {
      if (std::find(surviving.begin(), surviving.end(), uid) == surviving.end()) {
        dead.push_back(uid);
      }
    }
    for (TaskUid uid : dead) {
      TxnState& t = core_.txns.at(uid);
      // VM working copies are gone; NVM ones are freed with their dead owner.
      for (auto& [obj, wc] : t.working) {
        if (wc.region == MemRegion::NVM && wc.alloc != 0 && mem_.alive(wc.alloc)) {
          mem_.free(wc.alloc);
        }
      }
      for (const ReadAction& r : t.reads) unregister_reader(r.obj, uid);
      core_.txns.erase(uid);
    }
  }

  // Committed bytes as visible to a new reader right now.
  const Bytes& committed_bytes(ObjectId obj) const {
    const ObjMeta& m = core_.objects.at(obj);
    if (m.temp_valid) return m.temp_bytes;
    return persistent_bytes(obj);
  }

  const Bytes& persistent_bytes(ObjectId obj) const {
    const CommitMapStructure& c = core_.cmap;
    return core_.nvm_data.at(c.address_map[c.side(obj)][obj]);
  }

  // Baseline support: overwrite a persistent payload in place (log replay,
  // snapshot restore). Not crash-guarded; callers guard their own steps.
  void poke_persistent(ObjectId obj, const Bytes& value) {
    const CommitMapStructure& c = core_.cmap;
    Bytes v = value;
    v.resize(cfg_.object_size, 0);
    core_.nvm_data.at(c.address_map[c.side(obj)][obj]) = std::move(v);
  }

  void invalidate_temporary(ObjectId obj) {
    ObjMeta& m = core_.objects.at(obj);
    if (m.temp_valid) {
      if (m.temp_alloc != 0 && mem_.alive(m.temp_alloc)) mem_.free(m.temp_alloc);
      m.temp_valid = false;
      m.temp_bytes.clear();
      m.temp_alloc = 0;
    }
  }

  const DmCore& core() const { return core_; }
  DmCore snapshot_core() const { return core_; }
  void restore_core(const DmCore& c) { core_ = c; }

  // Live transactions in task-uid order, for deterministic iteration.
  std::vector<TaskUid> live_txns() const {
    std::vector<TaskUid> out;
    out.reserve(core_.txns.size());
    for (const auto& [uid, t] : core_.txns) out.push_back(uid);
    return out;
  }

 private:
  // Permanent emptiness only: the end cap is immovable, while an end bounded
  // by the current timestamp keeps growing as time advances.
  bool interval_empty(const TxnState& t) const { return t.run_begin > t.end_cap; }

  void register_reader(ObjMeta& m, TaskUid uid) {
    if (std::find(m.live_readers.begin(), m.live_readers.end(), uid) == m.live_readers.end()) {
      m.live_readers.push_back(uid);
    }
  }

  void unregister_reader(ObjectId obj, TaskUid uid) {
    auto& rs = core_.objects.at(obj).live_readers;
    rs.erase(std::remove(rs.begin(), rs.end(), uid), rs.end());
  }

  void refresh_temporary(ObjMeta& m, const Bytes& value) {
    if (m.temp_alloc == 0 || !mem_.alive(m.temp_alloc)) {
      m.temp_alloc = mem_.allocate(MemRegion::VM, cfg_.object_size, "temporary", 0);
    }
    m.temp_bytes = value;
    m.temp_valid = true;
  }

  void publish(TxnState& t, const ValidityInterval& iv, const std::vector<ObjectId>& modified,
               CommitResult& res) {
    crash_.hit("commit.publish");
    // Everything below models one crash-atomic micro-step.
    ++core_.commit_seq;
    std::uint16_t mask = 0;
    for (ObjectId obj : modified) mask |= static_cast<std::uint16_t>(1u << obj);

    if (cfg_.mode == DurableMode::ShadowAtCommit && !modified.empty()) {
      core_.cmap.bit_map ^= mask;
      for (ObjectId obj : modified) {
        unsigned active = core_.cmap.side(obj);
        AllocId now_active = core_.cmap.address_map[active][obj];
        AllocId was_active = core_.cmap.address_map[1 - active][obj];
        if (t.lengthy) {
          // The adopted working copy replaced the old spare; retire it.
          AllocId old_spare = core_.spare_alloc[obj];
          if (old_spare != now_active && mem_.alive(old_spare)) {
            core_.nvm_data.erase(old_spare);
            mem_.free(old_spare);
          }
          WorkingCopy& wc = t.working.at(obj);
          core_.nvm_data[now_active] = wc.bytes;
          wc.alloc = 0;  // ownership moved to the object
        }
        core_.spare_alloc[obj] = was_active;
        core_.cmap.address_map[1 - active][obj] = now_active;
      }
    }

    for (ObjectId obj : modified) {
      ObjMeta& m = core_.objects.at(obj);
      m.interval = iv;
      AllocId ma = mem_.allocate(MemRegion::NVM, kCommitEntryBytes, "commit_history", 0);
      m.history.push_back(CommitEntry{m.hist_base + m.history.size(), t.uid, t.record, iv,
                                      core_.commit_seq, clock_.ctx_switch_count, ma});
      prune_history(m);
    }

    // The finished task's reads pin it in the serialization order just like
    // its writes do: whoever overwrites those objects later must order behind
    // this task. The stamps ride in the same atomic step as the history.
    for (const ReadAction& r : t.reads) {
      ObjMeta& m = core_.objects.at(r.obj);
      m.read_stamp = std::max(m.read_stamp, iv.begin);
    }

    if (on_finished) on_finished(t.record, iv);
    if (cfg_.mode == DurableMode::ShadowAtCommit && on_durable_update) on_durable_update();
    if (cfg_.capture_old_values && on_commit_write) {
      for (const WriteAction& w : t.writes) {
        on_commit_write(t.uid, t.record, w.obj, w.old_value, t.working.at(w.obj).bytes);
      }
    }

    // End of the atomic step. Temporary-copy maintenance is VM-side work and
    // crash-irrelevant, as is notifying live readers.
    for (ObjectId obj : modified) {
      ObjMeta& m = core_.objects.at(obj);
      WorkingCopy& wc = t.working.at(obj);
      if (t.lengthy) {
        // Temporary copies of lengthy-committed objects are stale, not updated.
        invalidate_temporary(obj);
      } else {
        refresh_temporary(m, wc.bytes);
      }
      for (TaskUid reader : m.live_readers) {
        if (reader == t.uid) continue;
        TxnState& r = core_.txns.at(reader);
        // First post-read committer wins; later ones only deepen the cap.
        r.end_cap = std::min(r.end_cap, iv.begin == 0 ? 0 : iv.begin - 1);
        if (interval_empty(r) && !r.abort_pending) {
          r.abort_pending = true;
          res.early_aborted.push_back(reader);
        }
      }
    }
  }

  void prune_history(ObjMeta& m) {
    // Entries older than every live task's view of this object can no longer
    // be referenced by validation. Always keep the newest entry.
    std::uint64_t horizon = m.hist_base + m.history.size() - 1;
    for (const auto& [uid, t] : core_.txns) {
      for (const ReadAction& r : t.reads) {
        if (r.obj == m.id) horizon = std::min(horizon, r.hist_cursor);
      }
      for (const WriteAction& w : t.writes) {
        if (w.obj == m.id) horizon = std::min(horizon, w.hist_cursor);
      }
    }
    while (m.hist_base < horizon && !m.history.empty()) {
      if (m.history.front().meta_alloc != 0 && mem_.alive(m.history.front().meta_alloc)) {
        mem_.free(m.history.front().meta_alloc);
      }
      m.history.pop_front();
      ++m.hist_base;
    }
  }

  DataManagerConfig cfg_;
  SimClock& clock_;
  MemoryModel& mem_;
  CrashInjector& crash_;
  DmCore core_;
  std::uint64_t last_validate_comparisons_ = 0;
};

}  // namespace ifsim
