#pragma once

#include <cstddef>
#include <deque>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "fex/trace.hpp"
#include "fex/value.hpp"

namespace fex::sched {

/// Admission policy. CLI spelling: `inline`, `eager`, `lazy`, `pool:<c>`.
struct Policy {
  enum class Kind { Inline, Eager, Lazy, Pool };
  Kind kind = Kind::Eager;
  std::size_t capacity = 0;  // Pool only, >= 1

  static Policy inline_() { return {Kind::Inline, 0}; }
  static Policy eager() { return {Kind::Eager, 0}; }
  static Policy lazy() { return {Kind::Lazy, 0}; }
  static Policy pool(std::size_t capacity);

  /// nullopt for unknown names or a zero/garbled pool capacity.
  static std::optional<Policy> parse(std::string_view text);
  std::string name() const;

  /// Inline holds the invoking actor until the invoked instance completes.
  bool suspends_invoker() const { return kind == Kind::Inline; }

  friend bool operator==(const Policy&, const Policy&) = default;
};

struct SchedEvent {
  enum class Kind { InvokeArrived, ValueNeeded, InstanceBlocked, InstanceResumed, InstanceCompleted, Drain };
  Kind kind;
  InstanceId id;  // unused for Drain
};

/// Start (or, after InstanceResumed, continue) running `id`.
struct Admit {
  InstanceId id;
  friend bool operator==(const Admit&, const Admit&) = default;
};

struct SchedState {
  explicit SchedState(Policy p) : policy(p) {}

  Policy policy;
  std::size_t run_slots_in_use = 0;
  std::deque<InstanceId> admit_queue;
  bool draining = false;
};

/// Reacts to one controller notification. Only the controller calls this, one
/// event at a time. Queued ids are admitted in FIFO order under every policy.
std::vector<Admit> on_event(SchedState& state, SchedEvent event);

/// Peak number of instances executing at once: inside BODY_START..BODY_END and
/// not suspended (see trace::kSuspends / trace::kResumes). In a call-nested
/// sequential trace only the innermost body executes. Throws MalformedTrace if
/// body or suspension events are unpaired.
std::size_t max_observed_concurrency(const trace::Trace& trace);

}  // namespace fex::sched
