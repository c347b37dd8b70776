#include <doctest.h>

#include <sstream>
#include <thread>

#include "fex/runtime.hpp"
#include "fex/seqmodel.hpp"
#include "fex/trace.hpp"
#include "reference.hpp"

using namespace fex;
using namespace fex::trace;

namespace {

TraceEvent make(EventKind kind, std::string actor = "controller") {
  TraceEvent e;
  e.actor = std::move(actor);
  e.kind = kind;
  return e;
}

Trace controller_trace(const char* source, sched::Policy policy = sched::Policy::eager()) {
  auto program = lang::load(source);
  TraceSink sink;
  rt::run_abstract(program, policy, rt::ExecMode::simulated(0), sink);
  return sink.snapshot();
}

Trace sequential_trace(const char* source) {
  auto program = lang::load(source);
  TraceSink sink;
  seq::run_sequential(program, sink);
  return sink.snapshot();
}

std::size_t index_of(const Trace& t, EventKind kind, std::uint64_t id) {
  for (std::size_t i = 0; i < t.events.size(); ++i) {
    if (t.events[i].kind == kind && t.events[i].instance == InstanceId{id}) return i;
  }
  FAIL("event not found");
  return 0;
}

Outcome value_outcome(std::int64_t v) {
  Outcome o;
  o.result = Value::integer(v);
  return o;
}

Outcome error_outcome(ErrorKind k) {
  Outcome o;
  o.result = RuntimeError{k, ""};
  return o;
}

}  // namespace

TEST_CASE("record assigns seq from 1 and refuses after close") {
  TraceSink sink;
  CHECK(sink.record(make(EventKind::REQUEST_SENT)) == 1);
  CHECK(sink.record(make(EventKind::REQUEST_RECEIVED)) == 2);
  CHECK(sink.count() == 2);
  sink.close();
  CHECK(sink.closed());
  CHECK_THROWS_AS(sink.record(make(EventKind::ID_ASSIGNED)), SinkClosed);
  CHECK(sink.snapshot().events.size() == 2);
}

TEST_CASE("records from several executors get distinct consecutive seqs") {
  TraceSink sink;
  std::vector<std::thread> threads;
  for (int t = 0; t < 4; ++t) {
    threads.emplace_back([&sink, t] {
      for (int i = 0; i < 500; ++i) sink.record(make(EventKind::BODY_START, executor_actor(static_cast<std::size_t>(t))));
    });
  }
  for (auto& th : threads) th.join();
  auto t = sink.snapshot();
  REQUIRE(t.events.size() == 2000);
  for (std::size_t i = 0; i < t.events.size(); ++i) CHECK(t.events[i].seq == i + 1);
}

TEST_CASE("count-only sinks keep the counter but not the events") {
  TraceSink sink("n", TraceSink::Storage::CountOnly);
  sink.record(make(EventKind::BODY_START));
  sink.record(make(EventKind::BODY_END));
  CHECK(sink.count() == 2);
  CHECK(sink.snapshot().events.empty());
}

TEST_CASE("kind names round-trip") {
  for (int k = 0; k <= static_cast<int>(EventKind::RESULT_DISCARDED); ++k) {
    auto kind = static_cast<EventKind>(k);
    CHECK(kind_from_name(kind_name(kind)) == kind);
  }
  CHECK_FALSE(kind_from_name("FRAME_PUSHED"));
  CHECK(is_sequential_kind(EventKind::FRAME_POP));
  CHECK_FALSE(is_sequential_kind(EventKind::REQUEST_SENT));
}

TEST_CASE("backend traces conform to their schemes") {
  CHECK(check_conformance(sequential_trace("fn f(x) { x } fn main() { f(1) + f(2) }"), Scheme::Sequential).empty());
  auto t = controller_trace("fn f(x) { x } fn main() { let a = invoke f(1); f(2) + wait a }");
  CHECK(check_conformance(t, Scheme::Controller).empty());
  CHECK(check_conformance(t, Scheme::Scheduler).empty());
}

TEST_CASE("disposal before receipt is a violation") {
  Trace t = controller_trace("fn f(x) { x } fn main() { f(1) }");
  auto disposed = index_of(t, EventKind::INSTANCE_DISPOSED, 1);
  auto received = index_of(t, EventKind::RETURN_RECEIVED, 1);
  std::swap(t.events[disposed].kind, t.events[received].kind);
  auto v = check_conformance(t, Scheme::Controller);
  REQUIRE(v.size() == 1);
  CHECK(v[0].seq == t.events[received].seq);
  CHECK(v[0].rule == "lifecycle-order");
  CHECK(v[0].expected == "RETURN_RECEIVED");
  CHECK(v[0].found.find("INSTANCE_DISPOSED(i1)") == 0);
}

TEST_CASE("a sequential trace missing its last FRAME_POP is unbalanced") {
  Trace t = sequential_trace("fn f(x) { x } fn main() { f(1) }");
  REQUIRE(t.events.back().kind == EventKind::FRAME_POP);
  t.events.pop_back();
  auto v = check_conformance(t, Scheme::Sequential);
  REQUIRE(v.size() == 1);
  CHECK(v[0].rule == "frame-balance");
}

TEST_CASE("sequential checker rejects interleaved and orphaned cycles") {
  Trace t = sequential_trace("fn f(x) { x } fn main() { f(1) }");
  // Move the callee's FRAME_PUSH before main's BODY_START.
  std::swap(t.events[3].kind, t.events[5].kind);
  CHECK_FALSE(check_conformance(t, Scheme::Sequential).empty());

  Trace u = sequential_trace("fn main() { 1 }");
  u.events.insert(u.events.begin(), make(EventKind::FRAME_POP, "executor:0"));
  for (std::size_t i = 0; i < u.events.size(); ++i) u.events[i].seq = i + 1;
  CHECK(check_conformance(u, Scheme::Sequential)[0].rule == "frame-balance");
}

TEST_CASE("delivery to an actor that never waited is a violation") {
  Trace t = controller_trace("fn f(x) { x } fn main() { wait invoke f(1) }");
  auto delivered = index_of(t, EventKind::RETURN_DELIVERED, 1);
  t.events[delivered].detail = Detail{{"to", "instance:i9"}, {"value", "1"}};
  auto v = check_conformance(t, Scheme::Controller);
  REQUIRE_FALSE(v.empty());
  CHECK(v[0].rule == "deliver-only-to-waiter");
}

TEST_CASE("an incomplete lifecycle is a violation only for runs that succeeded") {
  Trace t = controller_trace("fn f(x) { x } fn main() { wait invoke f(1) }");
  t.events.pop_back();
  CHECK(check_conformance(t, Scheme::Controller)[0].rule.rfind("lifecycle-complete", 0) == 0);
  t.summary = RunSummary{std::nullopt, std::string("StepLimitExceeded")};
  CHECK(check_conformance(t, Scheme::Controller).empty());
}

TEST_CASE("non-monotone seq is malformed") {
  Trace t = sequential_trace("fn main() { 1 }");
  t.events[2].seq = 1;
  CHECK_THROWS_AS(check_conformance(t, Scheme::Sequential), MalformedTrace);
}

TEST_CASE("strict ordering table") {
  CHECK(strictly_ordered(Scheme::Controller, EventKind::RETURN_RECEIVED, EventKind::INSTANCE_DISPOSED));
  CHECK_FALSE(strictly_ordered(Scheme::Controller, EventKind::INSTANCE_DISPOSED, EventKind::RETURN_RECEIVED));
  CHECK_FALSE(strictly_ordered(Scheme::Controller, EventKind::RETURN_DELIVERED, EventKind::RESULT_DISCARDED));
  CHECK(strictly_ordered(Scheme::Sequential, EventKind::FRAME_PUSH, EventKind::FRAME_POP));
  CHECK_FALSE(strictly_ordered(Scheme::Sequential, EventKind::FRAME_PUSH, EventKind::REQUEST_SENT));
}

TEST_CASE("JSONL writes the documented fields and reads back identically") {
  auto program = lang::load("fn f(x) { x } fn main() { let h = invoke f(3); wait h }");
  TraceSink sink;
  Outcome o = rt::run_abstract(program, sched::Policy::eager(), rt::ExecMode::simulated(0), sink);
  Trace t = sink.snapshot();
  CHECK(t.summary == RunSummary::from(o));
  std::string text = to_jsonl(t);
  std::istringstream first_line(text);
  std::string line;
  std::getline(first_line, line);
  CHECK(line.rfind(R"({"seq":1,"actor":"caller:main","event":"REQUEST_SENT","instance":null,"fn":"f","detail":{)", 0) ==
        0);
  CHECK(text.find(R"({"actor":"run","event":"RUN_END","detail":{"result":3,"error":null}})") == std::string::npos);
  CHECK(text.find(R"("actor":"run","event":"RUN_END","detail":{"result":3,"error":null}})") != std::string::npos);

  std::istringstream in(text);
  Trace back = read_jsonl(in);
  CHECK(back.events == t.events);
  CHECK(back.summary == t.summary);
  CHECK(to_jsonl(back) == text);
}

TEST_CASE("error summaries and boolean results survive the file format") {
  Trace t;
  t.summary = RunSummary{std::nullopt, std::string("DivisionByZero")};
  std::istringstream in(to_jsonl(t));
  CHECK(read_jsonl(in).summary == t.summary);
  Trace b;
  b.summary = RunSummary{Value::boolean(true), std::nullopt};
  std::istringstream in2(to_jsonl(b));
  CHECK(read_jsonl(in2).summary == b.summary);
}

TEST_CASE("malformed trace files are rejected") {
  auto reject = [](const std::string& text) {
    std::istringstream in(text);
    CHECK_THROWS_AS(read_jsonl(in), MalformedTrace);
  };
  reject("not json\n");
  reject(R"({"seq":1,"actor":"controller","event":"NOPE","instance":null,"fn":null,"detail":{}})" "\n");
  reject(R"({"seq":2,"actor":"controller","event":"ENV_SETUP","instance":"i1","fn":null,"detail":{}})" "\n"
         R"({"seq":1,"actor":"controller","event":"ENV_SETUP","instance":"i1","fn":null,"detail":{}})" "\n");
  reject(R"({"seq":1,"actor":"controller","event":"ENV_SETUP","instance":"x1","fn":null,"detail":{}})" "\n");
  reject(R"({"seq":1,"actor":"controller","event":"ENV_SETUP","instance":null,"fn":null})" "\n");
}

TEST_CASE("compare_outcomes on fib(10) across backends reports equal") {
  auto program = lang::load("fn fib(n) { if n < 2 { n } else { fib(n - 1) + fib(n - 2) } } fn main() { fib(10) }");
  TraceSink a;
  TraceSink b;
  TraceSink c;
  std::vector<std::pair<std::string, Outcome>> rows = {
      {"seq", seq::run_sequential(program, a)},
      {"eager", rt::run_abstract(program, sched::Policy::eager(), rt::ExecMode::simulated(0), b)},
      {"pool:4", rt::run_abstract(program, sched::Policy::pool(4), rt::ExecMode::simulated(0), c)},
  };
  auto report = compare_outcomes(rows);
  CHECK(report.equal);
  CHECK(report.summary() == "equal (Int 55)");
  CHECK(report.dissenting.empty());
  CHECK(report.rows.size() == 3);
  CHECK(report.rows[0].steps != report.rows[1].steps);
}

TEST_CASE("identical outcomes compare equal, including uniform errors") {
  auto same = compare_outcomes({{"a", value_outcome(4)}, {"b", value_outcome(4)}});
  CHECK(same.equal);
  CHECK(same.dissenting.empty());
  auto errs = compare_outcomes({{"a", error_outcome(ErrorKind::DivisionByZero)},
                                {"b", error_outcome(ErrorKind::DivisionByZero)}});
  CHECK(errs.summary() == "equal (error: DivisionByZero)");
}

TEST_CASE("an altered outcome is named as dissenting") {
  auto r = compare_outcomes({{"seq", value_outcome(55)}, {"eager", value_outcome(55)}, {"bad", value_outcome(54)}});
  CHECK_FALSE(r.equal);
  CHECK(r.reference == "Int 55");
  CHECK(r.dissenting == std::vector<std::string>{"bad"});
  CHECK(r.summary().find("bad") != std::string::npos);
  CHECK_FALSE(r.rows[2].agrees);
}
