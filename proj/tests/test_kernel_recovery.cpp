#include <doctest.h>

#include <vector>

#include "ifsim/kernel.hpp"
#include "ifsim/recovery.hpp"
#include "ifsim/workloads.hpp"

using namespace ifsim;

namespace {

struct Rig {
  SimClock clk;
  MemoryModel mem{64 * 1024, 1024 * 1024};
  Kernel kernel{clk, mem};
  Workload wl = builtin_workloads()[3];  // a small task

  Task& spawn(RecordId rec, bool lengthy = false, bool suspended = false) {
    TaskAttributes attrs;
    attrs.name = wl.name;
    attrs.workload_idx = 3;
    return kernel.create_task(rec, attrs, wl, lengthy, suspended);
  }
};

}  // namespace

TEST_SUITE("kernel_recovery") {

TEST_CASE("round-robin order with preemption") {
  Rig rig;
  TaskUid a = rig.spawn(1).uid;
  TaskUid b = rig.spawn(2).uid;
  TaskUid c = rig.spawn(3).uid;

  CHECK(rig.kernel.schedule_next() == a);
  rig.kernel.preempt();
  CHECK(rig.kernel.schedule_next() == b);
  rig.kernel.preempt();
  CHECK(rig.kernel.schedule_next() == c);
  rig.kernel.preempt();
  CHECK(rig.kernel.schedule_next() == a);  // wrapped around
  CHECK(rig.clk.ctx_switch_count == 4);    // every pick advances the timestamp
  CHECK(rig.kernel.task(a).status == TaskStatus::Running);
  CHECK_FALSE(rig.kernel.task(a).context_saved);
  CHECK(rig.kernel.task(b).context_saved);
}

TEST_CASE("suspend removes from rotation; resume re-appends") {
  Rig rig;
  TaskUid a = rig.spawn(1).uid;
  TaskUid b = rig.spawn(2).uid;

  rig.kernel.suspend(b);
  CHECK(rig.kernel.schedule_next() == a);
  rig.kernel.preempt();
  CHECK(rig.kernel.schedule_next() == a);  // b never comes up

  CHECK_THROWS_AS(rig.kernel.suspend(a), LogicError);  // a is running

  rig.kernel.preempt();
  rig.kernel.resume(b);
  rig.kernel.resume(b);  // idempotent
  CHECK(rig.kernel.schedule_next() == a);
  rig.kernel.preempt();
  CHECK(rig.kernel.schedule_next() == b);
}

TEST_CASE("tasks created suspended wait for an explicit resume") {
  Rig rig;
  TaskUid a = rig.spawn(1, true, true).uid;
  CHECK(rig.kernel.task(a).status == TaskStatus::Suspended);
  CHECK(rig.kernel.schedule_next() == 0);
  rig.kernel.resume(a);
  CHECK(rig.kernel.schedule_next() == a);
}

TEST_CASE("kill reclaims the stack and clears the running slot") {
  Rig rig;
  TaskUid a = rig.spawn(1).uid;
  AllocId stack = rig.kernel.task(a).stack_alloc;
  rig.kernel.schedule_next();
  rig.kernel.kill(a);
  CHECK_FALSE(rig.kernel.exists(a));
  CHECK(rig.kernel.running() == 0);
  CHECK_FALSE(rig.mem.alive(stack));
  rig.kernel.kill(a);  // killing a ghost is a no-op
  CHECK(rig.mem.audit());
}

TEST_CASE("only switched-out lengthy tasks survive a power failure") {
  Rig rig;
  TaskUid small = rig.spawn(1, false).uid;
  TaskUid parked = rig.spawn(2, true).uid;
  TaskUid caught = rig.spawn(3, true).uid;
  CHECK(rig.kernel.task(parked).region == MemRegion::NVM);

  // `caught` is on the CPU when the power dies: registers lost.
  rig.kernel.schedule_next();
  rig.kernel.preempt();
  rig.kernel.schedule_next();
  CHECK(rig.kernel.running() == parked);
  rig.kernel.task(parked).done_us = 12345;  // accumulated progress, lives in NVM
  rig.kernel.preempt();
  rig.kernel.schedule_next();
  CHECK(rig.kernel.running() == caught);

  auto survivors = rig.kernel.on_power_failure();
  rig.mem.on_power_failure();

  REQUIRE(survivors == std::vector<TaskUid>{parked});
  CHECK_FALSE(rig.kernel.exists(small));
  CHECK_FALSE(rig.kernel.exists(caught));
  CHECK(rig.kernel.task(parked).status == TaskStatus::Suspended);
  CHECK(rig.kernel.task(parked).done_us == 12345);
  CHECK(rig.mem.alive(rig.kernel.task(parked).stack_alloc));
  CHECK(rig.kernel.running() == 0);
  CHECK(rig.mem.audit());
}

TEST_CASE("lengthy_ready lists only ready lengthy tasks in queue order") {
  Rig rig;
  rig.spawn(1, false);
  TaskUid b = rig.spawn(2, true).uid;
  TaskUid c = rig.spawn(3, true).uid;
  CHECK(rig.kernel.lengthy_ready() == std::vector<TaskUid>{b, c});
  rig.kernel.suspend(b);
  CHECK(rig.kernel.lengthy_ready() == std::vector<TaskUid>{c});
  CHECK(rig.kernel.any_lengthy_live());
}

TEST_CASE("records promote to lengthy on the second consecutive rerun") {
  MemoryModel mem(1024, 64 * 1024);
  RecoveryHandler rec(mem);
  RecordId id = rec.create_record(0, "matmul");
  auto no_ctx = [](TaskUid) { return false; };

  // First failure: rerun fresh, remember it.
  auto plan1 = rec.plan_resume(true, no_ctx);
  REQUIRE(plan1.size() == 1);
  CHECK(plan1[0].kind == ResumeKind::RecreateFresh);
  CHECK_FALSE(plan1[0].newly_lengthy);
  CHECK(rec.record(id).ever_rerun);
  CHECK_FALSE(rec.record(id).lengthy);

  // Second failure while still unfinished: promote.
  auto plan2 = rec.plan_resume(true, no_ctx);
  CHECK(plan2[0].kind == ResumeKind::RecreateLengthy);
  CHECK(plan2[0].newly_lengthy);
  CHECK(rec.record(id).lengthy);

  // Third failure without a surviving instance: recreate, no re-promotion.
  auto plan3 = rec.plan_resume(true, no_ctx);
  CHECK(plan3[0].kind == ResumeKind::RecreateLengthy);
  CHECK_FALSE(plan3[0].newly_lengthy);

  // With a surviving instance the live context is resumed instead.
  rec.set_live(id, 42);
  auto plan4 = rec.plan_resume(true, [](TaskUid uid) { return uid == 42; });
  CHECK(plan4[0].kind == ResumeKind::ResumeLive);
  CHECK(plan4[0].uid == 42);
}

TEST_CASE("resume planning without lengthy support recreates everything fresh") {
  MemoryModel mem(1024, 64 * 1024);
  RecoveryHandler rec(mem);
  RecordId id = rec.create_record(0, "fir");
  rec.plan_resume(false, [](TaskUid) { return false; });
  rec.plan_resume(false, [](TaskUid) { return false; });
  auto plan = rec.plan_resume(false, [](TaskUid) { return false; });
  CHECK(plan[0].kind == ResumeKind::RecreateFresh);
  CHECK_FALSE(rec.record(id).lengthy);
  CHECK_FALSE(rec.record(id).ever_rerun);
}

TEST_CASE("resume cost scales with unfinished records, not history") {
  MemoryModel mem(1024, 64 * 1024);
  RecoveryHandler rec(mem);
  std::vector<RecordId> ids;
  for (int i = 0; i < 8; ++i) ids.push_back(rec.create_record(0, "t"));
  for (int i = 0; i < 6; ++i) rec.mark_finished(ids[i], {1, 2});

  auto plan = rec.plan_resume(true, [](TaskUid) { return false; });
  CHECK(plan.size() == 2);
  CHECK(rec.last_resume_ops() == 2);
  CHECK(rec.unfinished() == std::vector<RecordId>{ids[6], ids[7]});
}

TEST_CASE("finish marks clear the live instance and survive re-planning") {
  MemoryModel mem(1024, 64 * 1024);
  RecoveryHandler rec(mem);
  RecordId id = rec.create_record(1, "sha256");
  rec.set_live(id, 9);
  rec.mark_finished(id, {3, 7});
  CHECK(rec.record(id).finished);
  CHECK(rec.record(id).live_uid == 0);
  CHECK(rec.record(id).finish_interval.begin == 3);
  CHECK(rec.plan_resume(true, [](TaskUid) { return true; }).empty());

  rec.gc_record(id);
  CHECK_FALSE(rec.has_record(id));
  CHECK(mem.audit());
}

TEST_CASE("low-voltage flag latches only when a lengthy task is live") {
  MemoryModel mem(1024, 64 * 1024);
  RecoveryHandler rec(mem);
  CHECK_FALSE(rec.on_low_voltage(false));
  CHECK_FALSE(rec.lv_flag());
  CHECK(rec.on_low_voltage(true));
  CHECK(rec.lv_flag());
  rec.clear_lv();
  CHECK_FALSE(rec.lv_flag());
}

}  // TEST_SUITE
