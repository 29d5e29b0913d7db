// Acceptance checks for the simulator, one criterion per invocation:
//
//   ifsim_acceptance <1..10>
//
// Each criterion prints exactly one PASS/FAIL line and exits nonzero on
// failure. The checks treat the library as a black box wherever possible:
// randomized schedules against the data manager, event-log oracles against
// full simulation runs, and exhaustive crash sweeps over the guarded
// micro-steps.

#include <algorithm>
#include <chrono>
#include <cstdio>
#include <cstdlib>
#include <cstring>
#include <map>
#include <memory>
#include <random>
#include <set>
#include <string>
#include <vector>

#include <json.hpp>

#include "ifsim/config.hpp"

using namespace ifsim;
using nlohmann::json;

namespace {

double seconds_since(std::chrono::steady_clock::time_point t0) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

std::string fmt(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.3f", v);
  return buf;
}

std::string fmt5(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.5f", v);
  return buf;
}

std::unique_ptr<Simulator> run_sim(SimConfig cfg) {
  auto sim = std::make_unique<Simulator>(std::move(cfg));
  sim->run();
  return sim;
}

SimConfig make_cfg(Scheme scheme, const char* trace, Micros duration_us,
                   Micros ckpt_period_us = 20'000) {
  SimConfig cfg;
  cfg.scheme = scheme;
  cfg.trace = std::strcmp(trace, "weak") == 0 ? builtin_trace_weak() : builtin_trace_strong();
  cfg.duration_us = duration_us;
  cfg.checkpoint_period_us = ckpt_period_us;
  return cfg;
}

struct Verdict {
  bool ok = true;
  std::string detail;

  void fail(const std::string& why) {
    if (ok) {
      ok = false;
      detail = why;
    }
  }
};

int report(int criterion, const Verdict& v, const std::string& pass_note) {
  if (v.ok) {
    std::printf("PASS [%d]: %s\n", criterion, pass_note.c_str());
    return 0;
  }
  std::printf("FAIL [%d]: %s\n", criterion, v.detail.c_str());
  return 1;
}

// ---------------------------------------------------------------------------
// Criterion 1: randomized concurrent schedules, with and without injected
// power failures, always produce conflict-serializable committed histories.
// The harness drives the data manager directly, records which committed
// version every read observed, and checks the resulting conflict graph for
// cycles. It also rejects dirty reads and non-repeatable reads outright.
// ---------------------------------------------------------------------------

struct HarnessOutcome {
  std::uint64_t schedules = 0;
  std::uint64_t commits = 0;
  std::uint64_t aborts = 0;
  std::uint64_t crashes = 0;
  std::uint64_t max_comparisons = 0;
};

bool run_schedule(std::uint64_t sched, Verdict& v, HarnessOutcome& out) {
  std::mt19937_64 rng(0x9E3779B97F4A7C15ULL ^ (sched * 0x2545F4914F6CDD1DULL + 1));
  auto pick = [&](std::uint64_t n) { return rng() % n; };
  const std::string at = "schedule " + std::to_string(sched) + ": ";

  const std::size_t nobj = 1 + pick(5);
  const std::size_t ntasks = 2 + pick(5);

  SimClock clk;
  MemoryModel mem(1 << 20, 8 << 20);
  CrashInjector crash;
  DataManagerConfig dcfg;
  dcfg.object_count = nobj;
  dcfg.object_size = 16;
  DataManager dm(dcfg, clk, mem, crash);

  if (sched % 3 == 0) {
    static const char* sites[] = {"commit.shadow_copy", "commit.map_write", "commit.publish"};
    crash.arm(CrashPoint{sites[pick(3)], 1 + pick(6)});
  }

  struct HOp {
    bool write;
    ObjectId obj;
  };
  struct HTask {
    TaskUid uid = 0;
    bool lengthy = false;
    bool wants_commit = true;
    std::vector<HOp> ops;
    std::size_t next = 0;
    bool done = false;
    std::set<std::pair<ObjectId, int>> observed;  // (object, version read)
    std::map<ObjectId, Bytes> last_written;
    std::uint64_t write_no = 0;
  };
  struct Version {
    Bytes bytes;
    int writer;  // committed-transaction node, -1 for the initial value
  };
  struct CommittedTx {
    int node = 0;
    std::set<std::pair<ObjectId, int>> reads;
  };

  std::vector<std::vector<Version>> versions(nobj);
  std::vector<std::map<Bytes, int>> lookup(nobj);
  for (std::size_t o = 0; o < nobj; ++o) {
    versions[o].push_back(Version{Bytes(16, 0), -1});
    lookup[o][Bytes(16, 0)] = 0;
  }

  std::vector<HTask> tasks(ntasks);
  for (std::size_t i = 0; i < ntasks; ++i) {
    HTask& t = tasks[i];
    t.uid = static_cast<TaskUid>(i + 1);
    t.lengthy = pick(5) == 0;
    t.wants_commit = pick(100) < 85;
    std::size_t nops = 1 + pick(5);
    for (std::size_t k = 0; k < nops; ++k) {
      t.ops.push_back(HOp{pick(2) == 0, static_cast<ObjectId>(pick(nobj))});
    }
    dm.begin_task(t.uid, t.uid, t.lengthy);
  }

  std::vector<CommittedTx> committed;

  auto value_for = [&](HTask& t, ObjectId obj) {
    std::uint64_t key = fnv1a_init();
    key = fnv1a(key, &sched, sizeof sched);
    key = fnv1a(key, &t.uid, sizeof t.uid);
    key = fnv1a(key, &obj, sizeof obj);
    key = fnv1a(key, &t.write_no, sizeof t.write_no);
    ++t.write_no;
    return deterministic_bytes(key, 16);
  };
  auto abort_task = [&](HTask& t) {
    dm.drop_task(t.uid);
    t.done = true;
    ++out.aborts;
  };
  auto power_failure = [&](TaskUid crashing) {
    ++out.crashes;
    mem.on_power_failure();
    std::vector<TaskUid> survivors;
    for (HTask& t : tasks) {
      if (!t.done && t.lengthy && t.uid != crashing) survivors.push_back(t.uid);
    }
    dm.on_power_failure(survivors);
    for (HTask& t : tasks) {
      if (!t.done && (!t.lengthy || t.uid == crashing)) {
        t.done = true;
        ++out.aborts;
      }
    }
    clk.ctx_switch_count += 1 + pick(3);
  };
  auto live_count = [&] {
    std::size_t n = 0;
    for (const HTask& t : tasks) {
      if (!t.done) ++n;
    }
    return n;
  };

  while (live_count() > 0) {
    HTask* t = nullptr;
    std::size_t idx = pick(tasks.size());
    for (std::size_t k = 0; k < tasks.size(); ++k) {
      HTask& cand = tasks[(idx + k) % tasks.size()];
      if (!cand.done) {
        t = &cand;
        break;
      }
    }
    if (pick(3) == 0) ++clk.ctx_switch_count;

    if (dm.early_abort_check(t->uid)) {
      abort_task(*t);
      continue;
    }

    if (t->next < t->ops.size()) {
      HOp op = t->ops[t->next++];
      if (op.write) {
        dm.dm_write(t->uid, op.obj, value_for(*t, op.obj));
        t->last_written[op.obj] = dm.txn(t->uid).working.at(op.obj).bytes;
        if (dm.early_abort_check(t->uid)) abort_task(*t);
      } else {
        DmReadResult r = dm.dm_read(t->uid, op.obj);
        if (r.source != ReadSource::WorkingCopy) {
          auto hit = lookup[op.obj].find(*r.data);
          if (hit == lookup[op.obj].end()) {
            v.fail(at + "read of object " + std::to_string(op.obj) +
                   " observed bytes that were never committed");
            return false;
          }
          t->observed.insert({op.obj, hit->second});
        }
        if (r.abort) abort_task(*t);
      }
      continue;
    }

    if (!t->wants_commit) {
      abort_task(*t);
      continue;
    }
    ++clk.ctx_switch_count;
    std::size_t writes = dm.txn(t->uid).writes.size();
    try {
      CommitResult res = dm.dm_commit(t->uid);
      std::uint64_t c = dm.last_validate_comparisons();
      out.max_comparisons = std::max(out.max_comparisons, c);
      if (c < 2 || c > 2 + 2 * writes) {
        v.fail(at + "validation made " + std::to_string(c) + " comparisons for " +
               std::to_string(writes) + " writes");
        return false;
      }
      if (res.committed) {
        CommittedTx tx;
        tx.node = static_cast<int>(committed.size());
        tx.reads = t->observed;
        for (const auto& [obj, bytes] : t->last_written) {
          versions[obj].push_back(Version{bytes, tx.node});
          int vi = static_cast<int>(versions[obj].size()) - 1;
          if (!lookup[obj].emplace(bytes, vi).second) {
            v.fail(at + "two committed versions share the same bytes");
            return false;
          }
        }
        committed.push_back(std::move(tx));
        t->done = true;
        ++out.commits;
      } else {
        abort_task(*t);
      }
    } catch (const CrashSignal&) {
      power_failure(t->uid);
    }
  }

  // A committed transaction must have seen exactly one version per object.
  for (const CommittedTx& tx : committed) {
    std::map<ObjectId, int> view;
    for (const auto& [obj, ver] : tx.reads) {
      auto [it, fresh] = view.emplace(obj, ver);
      if (!fresh && it->second != ver) {
        v.fail(at + "a committed transaction observed two versions of object " +
               std::to_string(obj));
        return false;
      }
    }
  }

  // Durable state must be the newest committed version of every object.
  for (std::size_t o = 0; o < nobj; ++o) {
    if (dm.persistent_bytes(static_cast<ObjectId>(o)) != versions[o].back().bytes) {
      v.fail(at + "persistent bytes of object " + std::to_string(o) +
             " are not the last committed version");
      return false;
    }
  }

  // Conflict graph: committed writer -> its readers; reader -> later writers;
  // per-object write order. A cycle means the history is not serializable.
  const int n = static_cast<int>(committed.size());
  std::vector<std::set<int>> adj(n);
  auto add_edge = [&](int a, int b) {
    if (a != b) adj[a].insert(b);
  };
  for (const CommittedTx& tx : committed) {
    for (const auto& [obj, ver] : tx.reads) {
      int w = versions[obj][static_cast<std::size_t>(ver)].writer;
      if (w >= 0) add_edge(w, tx.node);
      for (std::size_t k = static_cast<std::size_t>(ver) + 1; k < versions[obj].size(); ++k) {
        add_edge(tx.node, versions[obj][k].writer);
      }
    }
  }
  for (std::size_t o = 0; o < nobj; ++o) {
    for (std::size_t k = 2; k < versions[o].size(); ++k) {
      add_edge(versions[o][k - 1].writer, versions[o][k].writer);
    }
  }
  std::vector<int> indeg(n, 0);
  for (int a = 0; a < n; ++a) {
    for (int b : adj[a]) ++indeg[b];
  }
  std::vector<int> q;
  for (int i = 0; i < n; ++i) {
    if (indeg[i] == 0) q.push_back(i);
  }
  int ordered = 0;
  while (!q.empty()) {
    int a = q.back();
    q.pop_back();
    ++ordered;
    for (int b : adj[a]) {
      if (--indeg[b] == 0) q.push_back(b);
    }
  }
  if (ordered != n) {
    v.fail(at + "conflict graph over " + std::to_string(n) +
           " committed transactions has a cycle");
    return false;
  }
  ++out.schedules;
  return true;
}

int criterion_serializability() {
  auto t0 = std::chrono::steady_clock::now();
  Verdict v;
  HarnessOutcome out;
  for (std::uint64_t sched = 0; sched < 1000 && v.ok; ++sched) {
    run_schedule(sched, v, out);
  }
  if (v.ok && out.commits < 500) v.fail("too few commits to be meaningful");
  if (v.ok && out.crashes < 30) v.fail("too few injected crashes to be meaningful");
  double dt = seconds_since(t0);
  if (v.ok && dt >= 60.0) v.fail("harness exceeded its 60 s budget");
  return report(1, v,
                "1000 randomized schedules stay conflict-serializable (" +
                    std::to_string(out.commits) + " commits, " + std::to_string(out.aborts) +
                    " aborts, " + std::to_string(out.crashes) + " power failures, " + fmt(dt) +
                    " s)");
}

// ---------------------------------------------------------------------------
// Criterion 2: a crash at any guarded micro-step leaves durable state either
// all-old or all-new. Direct exhaustive sweep over the commit steps, plus
// full-simulation sweeps over snapshot/flush publication with an event-log
// rollback oracle.
// ---------------------------------------------------------------------------

bool commit_sweep_point(const char* site, std::uint64_t rel_occ, bool lengthy, Verdict& v) {
  const std::string at = std::string(site) + " +" + std::to_string(rel_occ) +
                         (lengthy ? " (lengthy)" : "") + ": ";
  SimClock clk;
  MemoryModel mem(1 << 20, 8 << 20);
  CrashInjector crash;
  DataManagerConfig dcfg;
  dcfg.object_count = 4;
  dcfg.object_size = 32;
  DataManager dm(dcfg, clk, mem, crash);
  const std::size_t nw = lengthy ? 2 : 4;

  std::vector<Bytes> oldv(4, Bytes(32, 0)), newv(4);
  TaskUid uid = 1;
  for (std::size_t o = 0; o < nw; ++o) {
    oldv[o] = deterministic_bytes(fnv1a("old#" + std::to_string(o)), 32);
    newv[o] = deterministic_bytes(fnv1a("new#" + std::to_string(o)), 32);
    dm.begin_task(uid, uid, false);
    dm.dm_write(uid, static_cast<ObjectId>(o), oldv[o]);
    ++clk.ctx_switch_count;
    if (!dm.dm_commit(uid).committed) {
      v.fail(at + "seeding commit failed");
      return false;
    }
    ++uid;
  }

  std::uint64_t base = 0;
  if (auto it = crash.counters().find(site); it != crash.counters().end()) base = it->second;
  crash.arm(CrashPoint{site, base + rel_occ});

  dm.begin_task(uid, uid, lengthy);
  for (std::size_t o = 0; o < nw; ++o) dm.dm_write(uid, static_cast<ObjectId>(o), newv[o]);
  ++clk.ctx_switch_count;
  bool crashed = false;
  try {
    dm.dm_commit(uid);
  } catch (const CrashSignal&) {
    crashed = true;
  }
  if (!crashed) {
    v.fail(at + "the armed micro-step never fired");
    return false;
  }

  mem.on_power_failure();
  dm.on_power_failure({});
  for (std::size_t o = 0; o < 4; ++o) {
    if (dm.persistent_bytes(static_cast<ObjectId>(o)) != oldv[o]) {
      v.fail(at + "object " + std::to_string(o) + " is not all-old after the crash");
      return false;
    }
  }

  TaskUid retry = uid + 1;
  dm.begin_task(retry, uid, lengthy);
  for (std::size_t o = 0; o < nw; ++o) dm.dm_write(retry, static_cast<ObjectId>(o), newv[o]);
  ++clk.ctx_switch_count;
  if (!dm.dm_commit(retry).committed) {
    v.fail(at + "clean rerun after the crash failed to commit");
    return false;
  }
  for (std::size_t o = 0; o < nw; ++o) {
    if (dm.persistent_bytes(static_cast<ObjectId>(o)) != newv[o]) {
      v.fail(at + "object " + std::to_string(o) + " is not all-new after the rerun");
      return false;
    }
  }
  if (!mem.audit()) {
    v.fail(at + "memory accounting does not balance");
    return false;
  }
  return true;
}

bool check_recovery_events(const std::vector<std::string>& events, bool rollback_scheme,
                           std::string& why) {
  std::set<std::uint64_t> published;
  std::uint64_t floor_fin = 0;
  for (const std::string& line : events) {
    json j = json::parse(line);
    const std::string ev = j["ev"].get<std::string>();
    if (ev == "checkpoint" || ev == "flush") {
      published.insert(j["fin"].get<std::uint64_t>());
    } else if (ev == "recovered") {
      std::uint64_t fin = j["fin"].get<std::uint64_t>();
      if (rollback_scheme) {
        if (fin != 0 && published.count(fin) == 0) {
          why = "recovered to " + std::to_string(fin) +
                " finished tasks, which matches no published image";
          return false;
        }
      } else {
        if (fin < floor_fin) {
          why = "finished-task count fell from " + std::to_string(floor_fin) + " to " +
                std::to_string(fin) + " across a failure";
          return false;
        }
        floor_fin = fin;
      }
    }
  }
  return true;
}

int criterion_crash_atomicity() {
  auto t0 = std::chrono::steady_clock::now();
  Verdict v;

  std::uint64_t direct_points = 0;
  for (std::uint64_t occ = 1; occ <= 4 && v.ok; ++occ) {
    if (commit_sweep_point("commit.shadow_copy", occ, false, v)) ++direct_points;
    if (v.ok && commit_sweep_point("commit.map_write", occ, false, v)) ++direct_points;
  }
  if (v.ok && commit_sweep_point("commit.publish", 1, false, v)) ++direct_points;
  for (std::uint64_t occ = 1; occ <= 2 && v.ok; ++occ) {
    if (commit_sweep_point("commit.map_write", occ, true, v)) ++direct_points;
  }
  if (v.ok && commit_sweep_point("commit.publish", 1, true, v)) ++direct_points;

  std::uint64_t swept_runs = 0;
  auto sweep_scheme = [&](Scheme s, std::vector<const char*> sites, bool rollback) {
    if (!v.ok) return;
    auto clean = run_sim(make_cfg(s, "weak", 2'000'000));
    auto counts = clean->crash().counters();
    for (const char* site : sites) {
      if (!v.ok) return;
      std::uint64_t maxocc = 0;
      if (auto it = counts.find(site); it != counts.end()) maxocc = it->second;
      if (maxocc == 0) {
        v.fail(std::string("micro-step never reached in a clean run: ") + site);
        return;
      }
      std::uint64_t stride = std::max<std::uint64_t>(1, maxocc / 25);
      for (std::uint64_t occ = 1; occ <= maxocc; occ += stride) {
        SimConfig cfg = make_cfg(s, "weak", 2'000'000);
        cfg.crash_plan = {{site, occ}};
        auto sim = run_sim(std::move(cfg));
        const std::string at =
            std::string(to_string(s)) + " " + site + " occ " + std::to_string(occ) + ": ";
        if (sim->metrics().crash_injections != 1) {
          v.fail(at + "armed crash did not fire exactly once");
          return;
        }
        std::string why;
        if (!check_recovery_events(sim->events(), rollback, why)) {
          v.fail(at + why);
          return;
        }
        if (!sim->memory().audit()) {
          v.fail(at + "memory accounting does not balance");
          return;
        }
        ++swept_runs;
      }
    }
  };
  sweep_scheme(Scheme::Sys, {"sys.snapshot.chunk", "sys.snapshot.publish"}, true);
  sweep_scheme(Scheme::Log, {"log.flush.chunk", "log.flush.publish", "log.recover.publish"},
               true);
  sweep_scheme(Scheme::Ours, {"commit.shadow_copy", "commit.map_write", "commit.publish"},
               false);

  double dt = seconds_since(t0);
  if (v.ok && dt >= 30.0) v.fail("sweep exceeded its 30 s budget");
  return report(2, v,
                "every crash point left durable state all-old or all-new (" +
                    std::to_string(direct_points) + " direct commit points, " +
                    std::to_string(swept_runs) + " full-run sweeps, " + fmt(dt) + " s)");
}

// ---------------------------------------------------------------------------
// Criterion 3: the committed history recorded in the event log, replayed
// serially with recomputed payloads, reproduces the persistent state byte for
// byte, across randomized crash schedules and both workload sets.
// ---------------------------------------------------------------------------

std::vector<Workload> replay_workloads() {
  std::vector<Workload> v;
  v.push_back(Workload{"PairWriter",
                       2'000,
                       2'050,
                       6'000,
                       6'100,
                       {{30, AccessKind::Write, 0},
                        {60, AccessKind::Write, 1},
                        {90, AccessKind::Write, 0}},
                       true,
                       false,
                       0});
  v.push_back(Workload{"Mixer",
                       1'700,
                       1'750,
                       5'000,
                       5'100,
                       {{40, AccessKind::Read, 1}, {80, AccessKind::Write, 2}},
                       true,
                       false,
                       0});
  v.push_back(Workload{"Tail",
                       1'300,
                       1'350,
                       4'000,
                       4'050,
                       {{50, AccessKind::Write, 3}, {95, AccessKind::Write, 4}},
                       true,
                       false,
                       0});
  return v;
}

bool replay_matches(const Simulator& sim, std::string& why) {
  const SimConfig& cfg = sim.config();
  std::map<std::string, const Workload*> by_name;
  for (const Workload& w : cfg.workloads) by_name[w.name] = &w;

  std::vector<Bytes> state(cfg.object_count, Bytes(cfg.object_size, 0));
  for (const std::string& line : sim.events()) {
    json j = json::parse(line);
    if (j["ev"] != "commit") continue;
    const Workload& w = *by_name.at(j["name"].get<std::string>());
    RecordId rec = j["rec"].get<std::uint64_t>();
    std::uint64_t ordinal = 0;
    // Payload ordinals follow execution order, which is the script bound to
    // progress offsets (identical for both placement regions).
    for (const BoundStep& s : bind_script(w, MemRegion::VM)) {
      if (s.kind != AccessKind::Write) continue;
      std::uint64_t key = fnv1a_init();
      key = fnv1a(key, &cfg.seed, sizeof cfg.seed);
      key = fnv1a(key, &rec, sizeof rec);
      key = fnv1a(key, &s.obj, sizeof s.obj);
      key = fnv1a(key, &ordinal, sizeof ordinal);
      ++ordinal;
      state[s.obj] = deterministic_bytes(key, cfg.object_size);
    }
  }
  for (std::size_t o = 0; o < cfg.object_count; ++o) {
    if (state[o] != sim.dm().persistent_bytes(static_cast<ObjectId>(o))) {
      why = "object " + std::to_string(o) + " differs from the serial replay";
      return false;
    }
  }
  return true;
}

int criterion_replay() {
  auto t0 = std::chrono::steady_clock::now();
  Verdict v;
  std::uint64_t crashes = 0, commits = 0;
  static const char* sites[] = {"commit.shadow_copy", "commit.map_write", "commit.publish"};

  for (int run = 0; run < 200 && v.ok; ++run) {
    std::mt19937_64 rng(9000 + run);
    SimConfig cfg = make_cfg(Scheme::Ours, "weak", 2'000'000);
    cfg.seed = static_cast<std::uint64_t>(run + 1);
    if (run % 2 == 1) cfg.workloads = replay_workloads();
    std::uint64_t npoints = 1 + rng() % 3;
    for (std::uint64_t i = 0; i < npoints; ++i) {
      cfg.crash_plan.push_back(CrashPoint{sites[rng() % 3], 1 + rng() % 80});
    }
    auto sim = run_sim(std::move(cfg));
    crashes += sim->metrics().crash_injections;
    commits += sim->metrics().commits;
    std::string why;
    if (!replay_matches(*sim, why)) {
      v.fail("run " + std::to_string(run) + ": " + why);
    }
  }
  if (v.ok && crashes < 50) v.fail("too few injected crashes to be meaningful");
  double dt = seconds_since(t0);
  if (v.ok && dt >= 60.0) v.fail("replay sweep exceeded its 60 s budget");
  return report(3, v,
                "200 randomized crash runs replay to byte-identical durable state (" +
                    std::to_string(commits) + " commits, " + std::to_string(crashes) +
                    " injected crashes, " + fmt(dt) + " s)");
}

// ---------------------------------------------------------------------------
// Criterion 4: backward validation never exceeds 2(N+M)+8 comparisons, where
// N is the objects a task accessed and M the tasks it overlapped with.
// ---------------------------------------------------------------------------

int criterion_validation_cost() {
  Verdict v;
  std::uint64_t max_c = 0, calls = 0;
  for (Scheme s : {Scheme::Ours, Scheme::Sys, Scheme::Log, Scheme::NaiveRerun}) {
    for (const char* trace : {"weak", "strong"}) {
      if (!v.ok) break;
      auto sim = run_sim(make_cfg(s, trace, 100'000'000));
      const Metrics& m = sim->metrics();
      if (m.validate_calls == 0) {
        v.fail(std::string(to_string(s)) + "/" + trace + ": no validations happened");
      } else if (!m.validate_bound_ok) {
        v.fail(std::string(to_string(s)) + "/" + trace +
               ": a validation exceeded 2(N+M)+8 comparisons (max " +
               std::to_string(m.validate_comparisons_max) + ")");
      }
      max_c = std::max(max_c, m.validate_comparisons_max);
      calls += m.validate_calls;
    }
  }
  return report(4, v,
                "validation cost stayed within 2(N+M)+8 comparisons (max " +
                    std::to_string(max_c) + " across " + std::to_string(calls) + " calls)");
}

// ---------------------------------------------------------------------------
// Criterion 5: the low-voltage interrupt threshold matches the analytic form
// sqrt(2 * P_max * T_cs / C + V_op^2).
// ---------------------------------------------------------------------------

int criterion_threshold() {
  Verdict v;
  double v200 = low_voltage_threshold(5.25e-3, 1e-3, 200e-6, 2.4);
  double v100 = low_voltage_threshold(5.25e-3, 1e-3, 100e-6, 2.4);
  if (std::abs(v200 - 2.4109) > 1e-4) {
    v.fail("200 uF threshold " + std::to_string(v200) + " is not 2.4109 +- 1e-4");
  }
  if (std::abs(v100 - 2.42177) > 1e-4) {
    v.fail("100 uF threshold " + std::to_string(v100) + " is not 2.42177 +- 1e-4");
  }
  if (v100 <= v200) {
    v.fail("a smaller capacitor must need the higher wake-margin threshold");
  }

  PowerParams p;  // defaults: 200 uF, v_op 2.4, p_max 5.25 mW
  PowerModel pm(p, builtin_trace_weak(), 1e-3);
  if (std::abs(pm.v_th() - v200) > 1e-12) {
    v.fail("the power model resolves a different threshold than the formula");
  }
  PowerParams fixed = p;
  fixed.v_th = 2.6;
  PowerModel pm2(fixed, builtin_trace_weak(), 1e-3);
  if (std::abs(pm2.v_th() - 2.6) > 1e-12) {
    v.fail("an explicit threshold override is not honored");
  }
  return report(5, v,
                "low-voltage threshold matches the analytic form (" + fmt5(v200) +
                    " V at 200 uF, " + fmt5(v100) + " V at 100 uF)");
}

// ---------------------------------------------------------------------------
// Criterion 6: under the weak 1.5 mW trace no long task ever fits in one
// power-on period, so only progress accumulation can finish one.
// ---------------------------------------------------------------------------

int criterion_long_tasks() {
  auto t0 = std::chrono::steady_clock::now();
  Verdict v;
  auto ours = run_sim(make_cfg(Scheme::Ours, "weak", 100'000'000));
  auto log = run_sim(make_cfg(Scheme::Log, "weak", 100'000'000));
  auto naive = run_sim(make_cfg(Scheme::NaiveRerun, "weak", 100'000'000));

  std::string note = "OURS finished";
  for (const char* name : {"MatMul", "FIR", "SHA256"}) {
    const auto& by = ours->counters().finished_by_workload;
    auto it = by.find(name);
    std::uint64_t fin = it == by.end() ? 0 : it->second;
    if (fin == 0) v.fail(std::string("OURS never finished ") + name + " in 100 s of weak power");
    note += std::string(" ") + name + "=" + std::to_string(fin);
  }
  if (log->counters().finished_long != 0) {
    v.fail("the write-ahead-log baseline finished a long task without progress accumulation");
  }
  if (naive->counters().finished_long != 0) {
    v.fail("plain rerun finished a long task that cannot fit in one power-on period");
  }
  double dt = seconds_since(t0);
  if (v.ok && dt >= 10.0) v.fail("three 100 s simulations took " + fmt(dt) + " s (budget 10 s)");
  return report(6, v, note + "; LOG and NAIVE_RERUN finished 0 (" + fmt(dt) + " s)");
}

// ---------------------------------------------------------------------------
// Criterion 7: small-task throughput under the strong 3 mW trace orders
// OURS above LOG above SYS at both checkpoint periods.
// ---------------------------------------------------------------------------

int criterion_throughput() {
  Verdict v;
  auto ours = run_sim(make_cfg(Scheme::Ours, "strong", 100'000'000));
  auto log20 = run_sim(make_cfg(Scheme::Log, "strong", 100'000'000, 20'000));
  auto sys20 = run_sim(make_cfg(Scheme::Sys, "strong", 100'000'000, 20'000));
  auto log200 = run_sim(make_cfg(Scheme::Log, "strong", 100'000'000, 200'000));
  auto sys200 = run_sim(make_cfg(Scheme::Sys, "strong", 100'000'000, 200'000));

  std::uint64_t o = ours->counters().finished_small;
  std::uint64_t l20 = log20->counters().finished_small;
  std::uint64_t s20 = sys20->counters().finished_small;
  std::uint64_t l200 = log200->counters().finished_small;
  std::uint64_t s200 = sys200->counters().finished_small;

  if (!(o > l20 && l20 > s20)) {
    v.fail("20 ms period ordering broken: OURS=" + std::to_string(o) +
           " LOG=" + std::to_string(l20) + " SYS=" + std::to_string(s20));
  }
  if (!(o > l200 && l200 > s200)) {
    v.fail("200 ms period ordering broken: OURS=" + std::to_string(o) +
           " LOG=" + std::to_string(l200) + " SYS=" + std::to_string(s200));
  }
  double log_ratio = l200 ? static_cast<double>(l20) / static_cast<double>(l200) : 0.0;
  double sys_ratio = s200 ? static_cast<double>(s20) / static_cast<double>(s200) : 0.0;
  return report(
      7, v,
      "small-task finishes order OURS > LOG > SYS at both periods (OURS=" + std::to_string(o) +
          ", LOG 20/200ms=" + std::to_string(l20) + "/" + std::to_string(l200) +
          ", SYS 20/200ms=" + std::to_string(s20) + "/" + std::to_string(s200) +
          "; denser-checkpoint gain LOG " + fmt(log_ratio) + "x, SYS " + fmt(sys_ratio) +
          "x, informational)");
}

// ---------------------------------------------------------------------------
// Criterion 8: no checkpoint suspension windows, and recovery at least 90%
// cheaper than either checkpointing baseline.
// ---------------------------------------------------------------------------

int criterion_overheads() {
  Verdict v;
  auto ours = run_sim(make_cfg(Scheme::Ours, "weak", 100'000'000));
  auto sys = run_sim(make_cfg(Scheme::Sys, "weak", 100'000'000));
  auto log = run_sim(make_cfg(Scheme::Log, "weak", 100'000'000));

  const Metrics& mo = ours->metrics();
  const Metrics& ms = sys->metrics();
  const Metrics& ml = log->metrics();

  if (mo.suspension_ms.n != 0) v.fail("instant recovery showed checkpoint suspension windows");
  if (ms.suspension_ms.n == 0 || std::abs(ms.suspension_ms.mean() - 7.5) > 0.075) {
    v.fail("snapshot suspension mean " + fmt(ms.suspension_ms.mean()) + " ms is not 7.5 +- 1%");
  }
  if (ml.suspension_ms.n == 0 || std::abs(ml.suspension_ms.mean() - 3.2) > 0.032) {
    v.fail("flush suspension mean " + fmt(ml.suspension_ms.mean()) + " ms is not 3.2 +- 1%");
  }
  if (mo.recovery_ms.n == 0 || mo.recovery_ms.mean() > 0.7) {
    v.fail("instant recovery mean " + fmt(mo.recovery_ms.mean()) + " ms exceeds 0.7 ms");
  }
  if (ms.recovery_ms.n == 0 || std::abs(ms.recovery_ms.mean() - 7.6) > 0.076) {
    v.fail("snapshot recovery mean " + fmt(ms.recovery_ms.mean()) + " ms is not 7.6 +- 1%");
  }
  if (ml.recovery_ms.n == 0 || std::abs(ml.recovery_ms.mean() - 7.0) > 0.07) {
    v.fail("log recovery mean " + fmt(ml.recovery_ms.mean()) + " ms is not 7.0 +- 1%");
  }
  double baseline = std::min(ms.recovery_ms.mean(), ml.recovery_ms.mean());
  if (mo.recovery_ms.mean() > 0.1 * baseline) {
    v.fail("recovery reduction below 90%: " + fmt(mo.recovery_ms.mean()) + " ms vs baseline " +
           fmt(baseline) + " ms");
  }
  return report(8, v,
                "suspension 0 / 7.5 / 3.2 ms and recovery " + fmt(mo.recovery_ms.mean()) +
                    " / 7.6 / 7.0 ms (OURS / SYS / LOG), a " +
                    fmt(100.0 * (1.0 - mo.recovery_ms.mean() / baseline)) +
                    "% recovery reduction");
}

// ---------------------------------------------------------------------------
// Criterion 9: recentness of durable state at each power failure: instant
// commit beats dense checkpointing beats sparse checkpointing.
// ---------------------------------------------------------------------------

int criterion_recentness() {
  Verdict v;
  auto ours = run_sim(make_cfg(Scheme::Ours, "weak", 100'000'000));
  auto log20 = run_sim(make_cfg(Scheme::Log, "weak", 100'000'000, 20'000));
  auto sys20 = run_sim(make_cfg(Scheme::Sys, "weak", 100'000'000, 20'000));
  auto log200 = run_sim(make_cfg(Scheme::Log, "weak", 100'000'000, 200'000));
  auto sys200 = run_sim(make_cfg(Scheme::Sys, "weak", 100'000'000, 200'000));

  double o = ours->metrics().recentness_ms.mean();
  double l20 = log20->metrics().recentness_ms.mean();
  double s20 = sys20->metrics().recentness_ms.mean();
  double l200 = log200->metrics().recentness_ms.mean();
  double s200 = sys200->metrics().recentness_ms.mean();

  for (const auto* sim :
       {ours.get(), log20.get(), sys20.get(), log200.get(), sys200.get()}) {
    if (sim->metrics().recentness_ms.n == 0) {
      v.fail("a run recorded no power failures to measure recentness on");
    }
  }
  if (!(o < l20)) v.fail("OURS " + fmt(o) + " ms is not fresher than LOG@20ms " + fmt(l20));
  if (!(o < s20)) v.fail("OURS " + fmt(o) + " ms is not fresher than SYS@20ms " + fmt(s20));
  if (!(l20 < l200)) {
    v.fail("LOG@20ms " + fmt(l20) + " ms is not fresher than LOG@200ms " + fmt(l200));
  }
  if (!(s20 < s200)) {
    v.fail("SYS@20ms " + fmt(s20) + " ms is not fresher than SYS@200ms " + fmt(s200));
  }
  return report(9, v,
                "durable-state age at failure: OURS " + fmt(o) + " < LOG@20ms " + fmt(l20) +
                    " < LOG@200ms " + fmt(l200) + " ms; SYS " + fmt(s20) + " < " + fmt(s200) +
                    " ms");
}

// ---------------------------------------------------------------------------
// Criterion 10: bit-exact determinism for a fixed configuration, seed, and
// crash schedule; a different seed diverges.
// ---------------------------------------------------------------------------

int criterion_determinism() {
  Verdict v;
  auto digest_of = [](SimConfig cfg) { return run_sim(std::move(cfg))->digest_hex(); };

  for (Scheme s : {Scheme::Ours, Scheme::Sys, Scheme::Log, Scheme::NaiveRerun}) {
    std::string a = digest_of(make_cfg(s, "weak", 3'000'000));
    std::string b = digest_of(make_cfg(s, "weak", 3'000'000));
    if (a != b) {
      v.fail(std::string(to_string(s)) + ": identical runs produced digests " + a + " and " + b);
    }
  }

  SimConfig crashy = make_cfg(Scheme::Ours, "weak", 3'000'000);
  crashy.crash_plan = {{"commit.publish", 5}};
  SimConfig crashy2 = crashy;
  std::string c1 = digest_of(std::move(crashy));
  std::string c2 = digest_of(std::move(crashy2));
  if (c1 != c2) v.fail("identical crash schedules produced digests " + c1 + " and " + c2);

  SimConfig reseeded = make_cfg(Scheme::Ours, "weak", 3'000'000);
  reseeded.seed = 2;
  if (digest_of(std::move(reseeded)) == digest_of(make_cfg(Scheme::Ours, "weak", 3'000'000))) {
    v.fail("different seeds produced the same digest");
  }
  return report(10, v,
                "digests are identical across reruns for every scheme, including under an "
                "injected crash schedule, and diverge on a seed change");
}

}  // namespace

int main(int argc, char** argv) {
  if (argc != 2) {
    std::fprintf(stderr, "usage: %s <criterion 1..10>\n", argv[0]);
    return 2;
  }
  switch (std::atoi(argv[1])) {
    case 1: return criterion_serializability();
    case 2: return criterion_crash_atomicity();
    case 3: return criterion_replay();
    case 4: return criterion_validation_cost();
    case 5: return criterion_threshold();
    case 6: return criterion_long_tasks();
    case 7: return criterion_throughput();
    case 8: return criterion_overheads();
    case 9: return criterion_recentness();
    case 10: return criterion_determinism();
    default:
      std::fprintf(stderr, "unknown criterion '%s'\n", argv[1]);
      return 2;
  }
}
