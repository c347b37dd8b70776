#pragma once

#include <cstdint>
#include <deque>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <variant>
#include <vector>

#include "fex/lang.hpp"
#include "fex/schedulers.hpp"
#include "fex/trace.hpp"
#include "fex/value.hpp"

namespace fex::rt {

/// A caller: either main's root actor or a function instance.
struct ActorId {
  std::optional<InstanceId> instance;

  static ActorId main() { return {}; }
  static ActorId of(InstanceId id) { return {id}; }
  std::string name() const;

  friend auto operator<=>(const ActorId&, const ActorId&) = default;
};

struct CallRequest {
  enum class Mode { Sync, Async };

  ActorId caller;
  const lang::FuncDef* fn = nullptr;
  std::vector<Value> args;
  Mode mode = Mode::Async;
};

/// What an instance hands back: its return value or the error it died with.
using Completion = std::variant<Value, RuntimeError>;

struct ControllerState {
  explicit ControllerState(sched::Policy policy) : sched(policy) {}

  std::uint64_t next_id = 1;
  std::map<InstanceId, CallRequest> pending;
  std::map<InstanceId, CallRequest> running;
  std::map<InstanceId, Completion> finished;
  std::map<InstanceId, ActorId> waiters;
  std::set<InstanceId> consumed;
  std::set<InstanceId> discarded;
  /// Inline policy: invokers parked until the instance they invoked completes.
  std::map<InstanceId, ActorId> parked_invokers;
  sched::SchedState sched;
};

/// Disjointness and waiter rules; used by tests after every transition.
bool invariants_hold(const ControllerState& state);

struct ControllerOutput {
  std::vector<trace::TraceEvent> events;
  std::vector<sched::Admit> admits;
};

struct InvokeResult : ControllerOutput {
  InstanceId id;
};

struct WaitResult : ControllerOutput {
  enum class Status { Ready, Blocked, Rejected };
  Status status = Status::Blocked;
  std::optional<Completion> ready;
  std::optional<RuntimeError> rejection;  // WaitConsumed or UnknownInstance
};

struct CompletionResult : ControllerOutput {
  std::optional<ActorId> delivered_to;
  std::optional<ActorId> unparked;
};

struct DrainResult {
  std::vector<trace::TraceEvent> events;
  /// Error of the lowest-numbered discarded instance that failed, if any.
  std::optional<RuntimeError> error;
};

/// Allocates the next id, queues the request, consults the policy.
/// Emits REQUEST_RECEIVED and ID_ASSIGNED.
InvokeResult handle_invoke(ControllerState& state, CallRequest req);

/// Starts a pending instance: INSTANCE_CREATED, ENV_SETUP and the fused
/// ARGS_DELIVERED/ARGS_RECEIVED pair. Returns the request it was created from.
CallRequest admit(ControllerState& state, InstanceId id, std::vector<trace::TraceEvent>& events);

/// Delivers immediately if `id` has finished; otherwise registers `caller` as
/// the waiter and tells the policy the value is needed. A handle already
/// delivered, or already claimed by another waiter, is rejected as WaitConsumed.
WaitResult handle_wait(ControllerState& state, const ActorId& caller, InstanceId id);

/// Receives an instance's result, disposes it, and delivers to a registered waiter.
/// Precondition: `id` is running.
CompletionResult handle_completion(ControllerState& state, InstanceId id, Completion result);

/// Switches the policy into end-of-program mode; returns the ids it now admits.
ControllerOutput drain(ControllerState& state);

/// Once nothing is pending or running: discards every unclaimed result.
DrainResult finish_drain(ControllerState& state);

struct ExecMode {
  enum class Kind { Simulated, Parallel };
  Kind kind = Kind::Simulated;
  std::uint64_t seed = 0;
  std::size_t workers = 1;

  static ExecMode simulated(std::uint64_t seed) { return {Kind::Simulated, seed, 1}; }
  static ExecMode parallel(std::size_t workers) { return {Kind::Parallel, 0, workers}; }
  std::string name() const;
};

/// Runs the program through the controller: every call becomes an instance.
/// Simulated mode runs all actors cooperatively on one executor, choosing the
/// next ready actor with a seeded generator; Parallel mode runs instances on
/// `workers` threads.
Outcome run_abstract(const lang::CheckedProgram& program, sched::Policy policy, ExecMode mode,
                     trace::TraceSink& sink, Limits limits = {});

}  // namespace fex::rt
