#include <doctest.h>

#include <string>
#include <vector>

#include "ifsim/event_queue.hpp"

using namespace ifsim;

TEST_SUITE("event_queue") {

TEST_CASE("fires in deadline order") {
  SimClock clock;
  EventQueue q(clock);
  std::vector<std::string> fired;
  q.schedule(30, EventClass::TaskWork, "c", [&] { fired.push_back("c"); });
  q.schedule(10, EventClass::TaskWork, "a", [&] { fired.push_back("a"); });
  q.schedule(20, EventClass::TaskWork, "b", [&] { fired.push_back("b"); });
  clock.now_us = 30;
  q.fire_due();
  CHECK(fired == std::vector<std::string>{"a", "b", "c"});
}

TEST_CASE("same deadline resolves by event class, then insertion") {
  SimClock clock;
  EventQueue q(clock);
  std::vector<std::string> fired;
  q.schedule(5, EventClass::TaskWork, "work", [&] { fired.push_back("work"); });
  q.schedule(5, EventClass::Scheduler, "tick2", [&] { fired.push_back("tick2"); });
  q.schedule(5, EventClass::Interrupt, "irq", [&] { fired.push_back("irq"); });
  q.schedule(5, EventClass::Scheduler, "tick1", [&] { fired.push_back("tick1"); });
  clock.now_us = 5;
  q.fire_due();
  CHECK(fired == std::vector<std::string>{"irq", "tick2", "tick1", "work"});
}

TEST_CASE("cancel suppresses delivery") {
  SimClock clock;
  EventQueue q(clock);
  int n = 0;
  EventId a = q.schedule(10, EventClass::TaskWork, "a", [&] { ++n; });
  q.schedule(10, EventClass::TaskWork, "b", [&] { ++n; });
  q.cancel(a);
  q.cancel(0);  // no-op
  clock.now_us = 10;
  q.fire_due();
  CHECK(n == 1);
}

TEST_CASE("scheduling in the past is a logic error") {
  SimClock clock;
  clock.now_us = 100;
  EventQueue q(clock);
  CHECK_THROWS_AS(q.schedule(99, EventClass::TaskWork, "late", [] {}), LogicError);
  CHECK_NOTHROW(q.schedule(100, EventClass::TaskWork, "now", [] {}));
}

TEST_CASE("next_deadline tracks the earliest live event") {
  SimClock clock;
  EventQueue q(clock);
  CHECK_FALSE(q.next_deadline().has_value());
  EventId a = q.schedule(50, EventClass::TaskWork, "a", [] {});
  q.schedule(70, EventClass::TaskWork, "b", [] {});
  CHECK(q.next_deadline() == 50);
  q.cancel(a);
  CHECK(q.next_deadline() == 70);
}

TEST_CASE("events scheduled during firing at the same instant also fire") {
  SimClock clock;
  EventQueue q(clock);
  int n = 0;
  q.schedule(10, EventClass::Scheduler, "outer", [&] {
    ++n;
    q.schedule(10, EventClass::TaskWork, "inner", [&] { ++n; });
  });
  clock.now_us = 10;
  q.fire_due();
  CHECK(n == 2);
}

TEST_CASE("advance runs the clock to the target") {
  SimClock clock;
  EventQueue q(clock);
  std::vector<Micros> at;
  q.schedule(10, EventClass::TaskWork, "a", [&] { at.push_back(clock.now_us); });
  q.schedule(25, EventClass::TaskWork, "b", [&] { at.push_back(clock.now_us); });
  q.advance(30);
  CHECK(clock.now_us == 30);
  CHECK(at == std::vector<Micros>{10, 25});
}

}  // TEST_SUITE
