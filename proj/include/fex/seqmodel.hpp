#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <string_view>
#include <utility>
#include <variant>
#include <vector>

#include "fex/lang.hpp"
#include "fex/trace.hpp"
#include "fex/value.hpp"

namespace fex::seq {

/// Where a returning call delivers its value.
struct ReturnAddress {
  enum class Kind {
    Entry,   // the run's result
    Value,   // onto the caller's value stack
    Handle,  // stored under `handle`; the caller receives Handle(handle)
  };
  Kind kind = Kind::Entry;
  const lang::Expr* call_site = nullptr;
  std::optional<InstanceId> handle;
};

/// One pending evaluation action; the work stack plays the program-counter role.
struct Instr {
  enum class Op { Eval, Arith, Branch, Bind, Unbind, CallApply, InvokeApply, WaitApply };
  Op op;
  const lang::Expr* node;
};

/// The evaluator's working registers. Saved into the callee part of a frame
/// across a call and restored on return.
struct EvalState {
  std::vector<Instr> work;
  std::vector<Value> values;
};

using Locals = std::vector<std::pair<std::string_view, Value>>;

struct Frame {
  std::string fn_name;
  const lang::FuncDef* def = nullptr;
  struct CallerPart {
    std::vector<Value> args;
    ReturnAddress return_address;
  } caller_part;
  struct CalleePart {
    std::optional<EvalState> saved_state;
    std::optional<Locals> locals;
  } callee_part;
};

/// Which calling-convention step the machine performs next.
enum class Phase {
  FramePush,
  ControlTransfer,
  SaveState,
  LocalsAlloc,
  BodyStart,
  Eval,
  BodyEnd,
  ReturnStored,
  LocalsFreed,
  RestoreState,
  ControlReturn,
  ReturnTaken,
  FramePop,
  AwaitReply,
  Terminated,
};

/// How calls, invokes and waits are carried out.
enum class CallMode {
  Inline,      // frames pushed on this machine's own stack
  Controller,  // surfaced as effects for a controller to serve
};

struct PendingCall {
  const lang::FuncDef* def = nullptr;
  std::vector<Value> args;
  ReturnAddress return_address;
};

struct MachineState {
  CallMode mode = CallMode::Inline;
  Limits limits;
  std::vector<Frame> stack;
  Phase phase = Phase::FramePush;
  EvalState control;
  std::optional<PendingCall> pending_call;
  std::optional<Value> pending_value;

  // Inline invoke bookkeeping: handles resolve as soon as their call returns.
  std::uint64_t next_instance = 1;
  std::map<InstanceId, Value> resolved;
  std::set<InstanceId> consumed;

  /// Call depth of the bottom frame minus one; non-zero only for controller instances.
  std::uint64_t base_depth = 0;
  std::uint64_t max_depth = 0;
  std::uint64_t steps = 0;
  std::optional<std::variant<Value, RuntimeError>> result;

  bool terminated() const { return phase == Phase::Terminated; }
  std::uint64_t depth() const { return base_depth + stack.size(); }
};

/// What the machine needs from its environment after a step (controller mode),
/// or how it ended.
struct Effect {
  enum class Kind { None, Request, Wait, Finished, Failed };
  Kind kind = Kind::None;
  const lang::FuncDef* callee = nullptr;
  std::vector<Value> args;
  bool sync = false;
  InstanceId wait_on;
};

struct StepResult {
  std::optional<trace::TraceEvent> event;
  Effect effect;
};

/// Machine poised to call `main` with an empty stack.
MachineState initial_state(const lang::CheckedProgram& program, Limits limits = {});

/// Machine already inside `def`'s body with `args` bound; used for controller
/// instances, which never push further frames.
MachineState instance_state(const lang::FuncDef& def, std::vector<Value> args, std::uint64_t depth, Limits limits);

/// Performs exactly one small-step transition. Errors become terminal states.
StepResult step(MachineState& state, const lang::CheckedProgram& program);

/// Controller mode: deliver the reply to a Request (a handle) or a Wait (a value).
void resume(MachineState& state, Value reply);
/// Controller mode: the awaited instance failed, or the request was refused.
void fail(MachineState& state, RuntimeError error);

/// Runs `main` on an explicit frame stack, recording every calling-convention step.
Outcome run_sequential(const lang::CheckedProgram& program, trace::TraceSink& sink, Limits limits = {});

/// Checked arithmetic shared by every backend.
std::variant<Value, RuntimeError> apply_binop(lang::BinOp op, const Value& lhs, const Value& rhs);

/// "[1, 2, i3]"
std::string render_args(const std::vector<Value>& args);

}  // namespace fex::seq
