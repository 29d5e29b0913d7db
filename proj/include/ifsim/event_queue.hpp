#pragma once

#include <algorithm>
#include <functional>
#include <limits>
#include <optional>
#include <queue>
#include <set>
#include <string>
#include <vector>

#include "ifsim/common.hpp"

namespace ifsim {

// Same-deadline ordering: power first, then interrupts, then the scheduler,
// then task work. Within a class, registration order wins.
enum class EventClass : int {
  Power = 0,
  Interrupt = 1,
  Scheduler = 2,
  TaskWork = 3,
};

inline const char* to_string(EventClass c) {
  switch (c) {
    case EventClass::Power: return "power";
    case EventClass::Interrupt: return "interrupt";
    case EventClass::Scheduler: return "scheduler";
    case EventClass::TaskWork: return "task_work";
  }
  return "?";
}

using EventId = std::uint64_t;

struct FiredEvent {
  EventId id = 0;
  Micros deadline_us = 0;
  EventClass cls = EventClass::TaskWork;
  std::string label;
};

struct SimClock {
  Micros now_us = 0;
  Micros tick_period_us = 1000;
  // Persisted in NVM by the recovery handler; survives power failures and
  // serves as the logical timestamp for validity intervals.
  Timestamp ctx_switch_count = 0;
};

class EventQueue {
 public:
  explicit EventQueue(SimClock& clock) : clock_(clock) {}

  Micros now() const { return clock_.now_us; }

  EventId schedule(Micros deadline_us, EventClass cls, std::string label,
                   std::function<void()> fn = {}) {
    if (deadline_us < clock_.now_us) {
      throw LogicError("event scheduled in the past: " + label);
    }
    EventId id = next_id_++;
    heap_.push(Entry{deadline_us, cls, id, std::move(label), std::move(fn)});
    ++live_;
    return id;
  }

  // Lazy deletion; cancelled ids are skipped when popped.
  void cancel(EventId id) {
    if (id == 0) return;
    auto [_, inserted] = cancelled_.insert(id);
    if (inserted && live_ > 0) --live_;
  }

  bool empty() const { return live_ == 0; }

  std::optional<Micros> next_deadline() {
    skim();
    if (heap_.empty()) return std::nullopt;
    return heap_.top().deadline_us;
  }

  // Advances the clock by delta_us, firing every due event in deadline order
  // (ties broken by class, then registration order). Handlers may schedule
  // further events; same-deadline insertions fire within the same call.
  std::vector<FiredEvent> advance(Micros delta_us) {
    Micros target = clock_.now_us + delta_us;
    std::vector<FiredEvent> fired;
    while (true) {
      skim();
      if (heap_.empty() || heap_.top().deadline_us > target) break;
      Entry e = heap_.top();
      heap_.pop();
      --live_;
      clock_.now_us = std::max(clock_.now_us, e.deadline_us);
      fired.push_back(FiredEvent{e.id, e.deadline_us, e.cls, e.label});
      if (e.fn) e.fn();
    }
    clock_.now_us = target;
    return fired;
  }

  // Fires events due exactly now (used by the simulator's main loop, which
  // interleaves queue events with closed-form power integration).
  std::vector<FiredEvent> fire_due() { return advance(0); }

 private:
  struct Entry {
    Micros deadline_us;
    EventClass cls;
    EventId id;
    std::string label;
    std::function<void()> fn;
  };

  struct Later {
    bool operator()(const Entry& a, const Entry& b) const {
      if (a.deadline_us != b.deadline_us) return a.deadline_us > b.deadline_us;
      if (a.cls != b.cls) return static_cast<int>(a.cls) > static_cast<int>(b.cls);
      return a.id > b.id;
    }
  };

  void skim() {
    while (!heap_.empty() && cancelled_.count(heap_.top().id) > 0) {
      cancelled_.erase(heap_.top().id);
      heap_.pop();
    }
  }

  SimClock& clock_;
  std::priority_queue<Entry, std::vector<Entry>, Later> heap_;
  std::set<EventId> cancelled_;
  std::size_t live_ = 0;
  EventId next_id_ = 1;
};

}  // namespace ifsim
