#include <doctest.h>

#include "fex/runtime.hpp"
#include "fex/schedulers.hpp"
#include "fex/seqmodel.hpp"
#include "reference.hpp"

using namespace fex;
using namespace fex::sched;

namespace {

InstanceId I(std::uint64_t n) { return InstanceId{n}; }

SchedEvent arrived(std::uint64_t n) { return {SchedEvent::Kind::InvokeArrived, I(n)}; }
SchedEvent needed(std::uint64_t n) { return {SchedEvent::Kind::ValueNeeded, I(n)}; }
SchedEvent blocked(std::uint64_t n) { return {SchedEvent::Kind::InstanceBlocked, I(n)}; }
SchedEvent resumed(std::uint64_t n) { return {SchedEvent::Kind::InstanceResumed, I(n)}; }
SchedEvent completed(std::uint64_t n) { return {SchedEvent::Kind::InstanceCompleted, I(n)}; }
SchedEvent drain() { return {SchedEvent::Kind::Drain, {}}; }

std::vector<Admit> admits(std::initializer_list<std::uint64_t> ids) {
  std::vector<Admit> out;
  for (auto n : ids) out.push_back({I(n)});
  return out;
}

trace::Trace abstract_trace(const std::string& path, Policy policy, rt::ExecMode mode) {
  auto program = lang::load(testing::read_text(path));
  trace::TraceSink sink;
  Outcome o = rt::run_abstract(program, policy, mode, sink);
  REQUIRE(o.ok());
  return sink.snapshot();
}

std::string corpus(const char* name) { return std::string(FEX_CORPUS_DIR) + "/" + name; }

}  // namespace

TEST_CASE("policy names round-trip and reject garbage") {
  for (const char* text : {"inline", "eager", "lazy", "pool:1", "pool:4", "pool:64"}) {
    auto p = Policy::parse(text);
    REQUIRE(p);
    CHECK(p->name() == text);
  }
  for (const char* text : {"", "pool", "pool:", "pool:0", "pool:-1", "pool:2x", "Eager", "fifo"}) {
    CHECK_FALSE(Policy::parse(text));
  }
  CHECK(Policy::inline_().suspends_invoker());
  CHECK_FALSE(Policy::eager().suspends_invoker());
}

TEST_CASE("eager admits every arrival immediately in arrival order") {
  SchedState s(Policy::eager());
  std::vector<Admit> all;
  for (std::uint64_t n = 1; n <= 3; ++n) {
    auto out = on_event(s, arrived(n));
    all.insert(all.end(), out.begin(), out.end());
  }
  CHECK(all == admits({1, 2, 3}));
  CHECK(on_event(s, completed(1)).empty());
}

TEST_CASE("inline admits immediately") {
  SchedState s(Policy::inline_());
  CHECK(on_event(s, arrived(1)) == admits({1}));
}

TEST_CASE("lazy admits only when the value is needed") {
  SchedState s(Policy::lazy());
  CHECK(on_event(s, arrived(1)).empty());
  CHECK(on_event(s, needed(1)) == admits({1}));
  CHECK(s.admit_queue.empty());
}

TEST_CASE("lazy drain admits the queue in FIFO order and later arrivals at once") {
  SchedState s(Policy::lazy());
  on_event(s, arrived(1));
  on_event(s, arrived(2));
  on_event(s, arrived(3));
  CHECK(on_event(s, needed(2)) == admits({2}));
  CHECK(on_event(s, needed(2)).empty());
  CHECK(on_event(s, drain()) == admits({1, 3}));
  CHECK(on_event(s, arrived(4)) == admits({4}));
}

TEST_CASE("pool(2) queues beyond capacity and admits on completion") {
  SchedState s(Policy::pool(2));
  CHECK(on_event(s, arrived(1)) == admits({1}));
  CHECK(on_event(s, arrived(2)) == admits({2}));
  CHECK(on_event(s, arrived(3)).empty());
  CHECK(on_event(s, arrived(4)).empty());
  CHECK(s.run_slots_in_use == 2);
  CHECK(on_event(s, completed(1)) == admits({3}));
  CHECK(s.admit_queue == std::deque{I(4)});
}

TEST_CASE("pool blocking frees a slot and resumption waits for one") {
  SchedState s(Policy::pool(1));
  CHECK(on_event(s, arrived(1)) == admits({1}));
  CHECK(on_event(s, arrived(2)).empty());
  CHECK(on_event(s, blocked(1)) == admits({2}));
  CHECK(on_event(s, resumed(1)).empty());
  CHECK(on_event(s, completed(2)) == admits({1}));
  CHECK(on_event(s, completed(1)).empty());
  CHECK(s.run_slots_in_use == 0);
}

TEST_CASE("pool never exceeds its capacity under a random event stream") {
  std::mt19937_64 rng(7);
  for (std::size_t cap : {1, 2, 3, 5}) {
    SchedState s(Policy::pool(cap));
    std::vector<InstanceId> running;
    std::vector<InstanceId> waiting;  // blocked, not yet resumed
    std::uint64_t next = 1;
    for (int i = 0; i < 2000; ++i) {
      std::vector<Admit> out;
      auto r = rng() % 4;
      if (r == 0 || running.empty()) {
        out = on_event(s, arrived(next++));
      } else if (r == 1) {
        auto k = rng() % running.size();
        InstanceId id = running[k];
        running.erase(running.begin() + static_cast<std::ptrdiff_t>(k));
        waiting.push_back(id);
        out = on_event(s, blocked(id.counter));
      } else if (r == 2 && !waiting.empty()) {
        InstanceId id = waiting.front();
        waiting.erase(waiting.begin());
        out = on_event(s, resumed(id.counter));
      } else {
        auto k = rng() % running.size();
        InstanceId id = running[k];
        running.erase(running.begin() + static_cast<std::ptrdiff_t>(k));
        out = on_event(s, completed(id.counter));
      }
      for (auto a : out) running.push_back(a.id);
      CHECK(running.size() == s.run_slots_in_use);
      CHECK(s.run_slots_in_use <= cap);
      // Work conservation: no free slot while something is queued.
      CHECK((s.admit_queue.empty() || s.run_slots_in_use == cap));
    }
  }
}

TEST_CASE("sequential and inline traces have concurrency exactly 1") {
  auto program = lang::load(testing::read_text(corpus("busy.fx")));
  trace::TraceSink sink;
  seq::run_sequential(program, sink);
  CHECK(max_observed_concurrency(sink.snapshot()) == 1);
  CHECK(max_observed_concurrency(abstract_trace(corpus("busy.fx"), Policy::inline_(), rt::ExecMode::parallel(4))) == 1);
  CHECK(max_observed_concurrency(abstract_trace(corpus("fanout100.fx"), Policy::inline_(),
                                                rt::ExecMode::simulated(3))) == 1);
}

TEST_CASE("a single simulated executor interleaves but never overlaps instances") {
  for (std::uint64_t seed = 0; seed < 4; ++seed) {
    CHECK(max_observed_concurrency(abstract_trace(corpus("busy.fx"), Policy::eager(), rt::ExecMode::simulated(seed))) ==
          1);
  }
}

TEST_CASE("pool(4) in parallel mode stays within four executing instances") {
  for (int i = 0; i < 10; ++i) {
    auto n = max_observed_concurrency(abstract_trace(corpus("busy.fx"), Policy::pool(4), rt::ExecMode::parallel(4)));
    CHECK(n >= 1);
    CHECK(n <= 4);
  }
}

TEST_CASE("concurrency counting follows suspension markers") {
  using trace::EventKind;
  trace::Trace t;
  auto ev = [&](std::string actor, EventKind k, trace::Detail d = {}) {
    trace::TraceEvent e;
    e.seq = t.events.size() + 1;
    e.actor = std::move(actor);
    e.kind = k;
    e.detail = std::move(d);
    t.events.push_back(e);
  };
  ev("instance:i1", EventKind::BODY_START);
  ev("instance:i2", EventKind::BODY_START);
  ev("instance:i1", EventKind::WAIT_REQUESTED, {{"suspends", "instance:i1"}});
  ev("instance:i3", EventKind::BODY_START);
  ev("instance:i3", EventKind::BODY_END);
  ev("instance:i1", EventKind::RETURN_CONSUMED, {{"resumes", "instance:i1"}});
  ev("instance:i2", EventKind::BODY_END);
  ev("instance:i1", EventKind::BODY_END);
  CHECK(max_observed_concurrency(t) == 2);

  t.events.pop_back();
  CHECK_THROWS_AS(max_observed_concurrency(t), trace::MalformedTrace);
}
