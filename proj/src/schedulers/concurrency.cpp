#include <algorithm>
#include <map>

#include "fex/schedulers.hpp"

namespace fex::sched {

namespace {

using trace::EventKind;
using trace::MalformedTrace;

std::string at(const trace::TraceEvent& e) { return "seq " + std::to_string(e.seq) + ": "; }

std::size_t sequential_concurrency(const trace::Trace& t) {
  std::size_t open = 0;
  std::size_t peak = 0;
  for (const auto& e : t.events) {
    if (e.kind == EventKind::BODY_START) {
      ++open;
    } else if (e.kind == EventKind::BODY_END) {
      if (open == 0) throw MalformedTrace(at(e) + "BODY_END without BODY_START");
      --open;
    }
    // Callers are parked while their callee runs: at most the innermost body executes.
    peak = std::max(peak, std::min<std::size_t>(open, 1));
  }
  if (open != 0 && !t.ended_in_error()) throw MalformedTrace("unterminated body at end of trace");
  return peak;
}

struct ActorState {
  bool open = false;
  bool suspended = false;
};

bool is_instance(std::string_view actor) { return actor.rfind("instance:", 0) == 0; }

std::size_t controller_concurrency(const trace::Trace& t) {
  std::map<std::string, ActorState, std::less<>> actors;
  std::size_t running = 0;
  std::size_t peak = 0;
  for (const auto& e : t.events) {
    if (e.kind == EventKind::BODY_START && is_instance(e.actor)) {
      auto& a = actors[e.actor];
      if (a.open) throw MalformedTrace(at(e) + e.actor + " started twice");
      a.open = true;
      ++running;
    } else if (e.kind == EventKind::BODY_END && is_instance(e.actor)) {
      auto& a = actors[e.actor];
      if (!a.open || a.suspended) throw MalformedTrace(at(e) + e.actor + " ended while not executing");
      a.open = false;
      --running;
    }
    if (auto who = e.detail.get(trace::kSuspends); who && is_instance(*who)) {
      auto it = actors.find(*who);
      if (it == actors.end() || !it->second.open || it->second.suspended) {
        throw MalformedTrace(at(e) + std::string(*who) + " suspended while not executing");
      }
      it->second.suspended = true;
      --running;
    }
    if (auto who = e.detail.get(trace::kResumes); who && is_instance(*who)) {
      auto it = actors.find(*who);
      if (it == actors.end() || !it->second.suspended) {
        throw MalformedTrace(at(e) + std::string(*who) + " resumed while not suspended");
      }
      it->second.suspended = false;
      ++running;
    }
    peak = std::max(peak, running);
  }
  if (!t.ended_in_error()) {
    for (const auto& [name, a] : actors) {
      if (a.open) throw MalformedTrace(name + " body never ended");
    }
  }
  return peak;
}

}  // namespace

std::size_t max_observed_concurrency(const trace::Trace& trace) {
  bool sequential = std::any_of(trace.events.begin(), trace.events.end(), [](const trace::TraceEvent& e) {
    return trace::is_sequential_kind(e.kind) && e.kind != EventKind::BODY_START && e.kind != EventKind::BODY_END;
  });
  return sequential ? sequential_concurrency(trace) : controller_concurrency(trace);
}

}  // namespace fex::sched
