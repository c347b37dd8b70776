#include <cassert>

#include "fex/runtime.hpp"
#include "fex/seqmodel.hpp"

namespace fex::rt {

namespace {

using trace::EventKind;
using trace::TraceEvent;

TraceEvent event(std::string actor, EventKind kind, std::optional<InstanceId> id, std::optional<std::string> fn,
                 trace::Detail detail = {}) {
  TraceEvent e;
  e.actor = std::move(actor);
  e.kind = kind;
  e.instance = id;
  e.fn = std::move(fn);
  e.detail = std::move(detail);
  return e;
}

void describe_completion(trace::Detail& d, const Completion& c) {
  if (auto* v = std::get_if<Value>(&c)) {
    d.set("value", v->str());
  } else {
    d.set("error", std::get<RuntimeError>(c).name());
  }
}

void append(std::vector<sched::Admit>& out, std::vector<sched::Admit> more) {
  out.insert(out.end(), more.begin(), more.end());
}

}  // namespace

std::string ActorId::name() const {
  return instance ? trace::instance_actor(*instance) : trace::caller_actor(lang::Program::entry);
}

bool invariants_hold(const ControllerState& s) {
  for (std::uint64_t n = 1; n < s.next_id; ++n) {
    InstanceId id{n};
    int homes = static_cast<int>(s.pending.count(id)) + static_cast<int>(s.running.count(id)) +
                static_cast<int>(s.finished.count(id)) + static_cast<int>(s.consumed.count(id)) +
                static_cast<int>(s.discarded.count(id));
    if (homes != 1) return false;
  }
  for (const auto& [id, waiter] : s.waiters) {
    if (!s.pending.count(id) && !s.running.count(id) && !s.finished.count(id)) return false;
  }
  if (s.sched.policy.kind == sched::Policy::Kind::Pool && s.sched.run_slots_in_use > s.sched.policy.capacity) {
    return false;
  }
  return true;
}

InvokeResult handle_invoke(ControllerState& state, CallRequest req) {
  InvokeResult r;
  r.id = InstanceId{state.next_id++};
  const std::string& fn = req.fn->name;
  r.events.push_back(event(trace::controller_actor(), EventKind::REQUEST_RECEIVED, std::nullopt, fn,
                           {{"from", req.caller.name()}, {"args", seq::render_args(req.args)}}));
  r.events.push_back(event(trace::controller_actor(), EventKind::ID_ASSIGNED, r.id, fn,
                           {{"caller", req.caller.name()},
                            {"mode", req.mode == CallRequest::Mode::Sync ? "sync" : "async"}}));
  if (state.sched.policy.suspends_invoker()) state.parked_invokers.emplace(r.id, req.caller);
  state.pending.emplace(r.id, std::move(req));
  r.admits = sched::on_event(state.sched, {sched::SchedEvent::Kind::InvokeArrived, r.id});
  return r;
}

CallRequest admit(ControllerState& state, InstanceId id, std::vector<TraceEvent>& events) {
  auto node = state.pending.extract(id);
  assert(!node.empty());
  CallRequest req = node.mapped();
  const std::string& fn = req.fn->name;
  events.push_back(event(trace::controller_actor(), EventKind::INSTANCE_CREATED, id, fn));
  events.push_back(event(trace::controller_actor(), EventKind::ENV_SETUP, id, fn));
  events.push_back(
      event(trace::controller_actor(), EventKind::ARGS_DELIVERED, id, fn, {{"args", seq::render_args(req.args)}}));
  events.push_back(event(trace::instance_actor(id), EventKind::ARGS_RECEIVED, id, fn));
  state.running.emplace(id, req);
  return req;
}

WaitResult handle_wait(ControllerState& state, const ActorId& caller, InstanceId id) {
  WaitResult r;
  if (id.counter == 0 || id.counter >= state.next_id) {
    r.status = WaitResult::Status::Rejected;
    r.rejection = RuntimeError{ErrorKind::UnknownInstance, "no instance " + id.str()};
    return r;
  }
  const CallRequest* req = nullptr;
  if (auto it = state.pending.find(id); it != state.pending.end()) req = &it->second;
  if (auto it = state.running.find(id); it != state.running.end()) req = &it->second;
  std::optional<std::string> fn;
  if (req) fn = req->fn->name;

  TraceEvent wait = event(caller.name(), EventKind::WAIT_REQUESTED, id, fn);

  if (state.consumed.count(id) || state.discarded.count(id) || state.waiters.count(id)) {
    wait.detail.set("blocked", "false");
    r.events.push_back(std::move(wait));
    r.status = WaitResult::Status::Rejected;
    r.rejection = RuntimeError{ErrorKind::WaitConsumed, "handle " + id.str() + " already claimed"};
    return r;
  }
  if (auto it = state.finished.find(id); it != state.finished.end()) {
    wait.detail.set("blocked", "false");
    r.events.push_back(std::move(wait));
    trace::Detail d{{"to", caller.name()}};
    describe_completion(d, it->second);
    r.events.push_back(event(trace::controller_actor(), EventKind::RETURN_DELIVERED, id, std::nullopt, d));
    r.events.push_back(event(caller.name(), EventKind::RETURN_CONSUMED, id, std::nullopt));
    r.status = WaitResult::Status::Ready;
    r.ready = it->second;
    state.finished.erase(it);
    state.consumed.insert(id);
    return r;
  }
  wait.detail.set("blocked", "true");
  wait.detail.set(std::string(trace::kSuspends), caller.name());
  r.events.push_back(std::move(wait));
  state.waiters.emplace(id, caller);
  r.status = WaitResult::Status::Blocked;
  append(r.admits, sched::on_event(state.sched, {sched::SchedEvent::Kind::ValueNeeded, id}));
  if (caller.instance) {
    append(r.admits, sched::on_event(state.sched, {sched::SchedEvent::Kind::InstanceBlocked, *caller.instance}));
  }
  return r;
}

CompletionResult handle_completion(ControllerState& state, InstanceId id, Completion result) {
  CompletionResult r;
  auto node = state.running.extract(id);
  assert(!node.empty() && "completion of an instance that is not running");
  const std::string fn = node.mapped().fn->name;

  trace::Detail received;
  describe_completion(received, result);
  r.events.push_back(event(trace::controller_actor(), EventKind::RETURN_RECEIVED, id, fn, received));
  r.events.push_back(event(trace::controller_actor(), EventKind::ENV_TEARDOWN, id, fn));
  TraceEvent disposed = event(trace::controller_actor(), EventKind::INSTANCE_DISPOSED, id, fn);
  if (auto it = state.parked_invokers.find(id); it != state.parked_invokers.end()) {
    r.unparked = it->second;
    disposed.detail.set(std::string(trace::kResumes), it->second.name());
    state.parked_invokers.erase(it);
  }
  r.events.push_back(std::move(disposed));
  append(r.admits, sched::on_event(state.sched, {sched::SchedEvent::Kind::InstanceCompleted, id}));

  if (auto it = state.waiters.find(id); it != state.waiters.end()) {
    ActorId waiter = it->second;
    state.waiters.erase(it);
    state.consumed.insert(id);
    trace::Detail d{{"to", waiter.name()}};
    describe_completion(d, result);
    r.events.push_back(event(trace::controller_actor(), EventKind::RETURN_DELIVERED, id, fn, d));
    r.delivered_to = waiter;
    if (waiter.instance) {
      append(r.admits, sched::on_event(state.sched, {sched::SchedEvent::Kind::InstanceResumed, *waiter.instance}));
    }
  } else {
    state.finished.emplace(id, std::move(result));
  }
  return r;
}

ControllerOutput drain(ControllerState& state) {
  ControllerOutput out;
  out.admits = sched::on_event(state.sched, {sched::SchedEvent::Kind::Drain, InstanceId{}});
  return out;
}

DrainResult finish_drain(ControllerState& state) {
  DrainResult r;
  for (auto& [id, completion] : state.finished) {
    trace::Detail d;
    describe_completion(d, completion);
    r.events.push_back(event(trace::controller_actor(), EventKind::RESULT_DISCARDED, id, std::nullopt, d));
    if (auto* err = std::get_if<RuntimeError>(&completion); err && !r.error) r.error = *err;
    state.discarded.insert(id);
  }
  state.finished.clear();
  return r;
}

std::string ExecMode::name() const {
  if (kind == Kind::Simulated) return "simulated:" + std::to_string(seed);
  return "parallel:" + std::to_string(workers);
}

}  // namespace fex::rt
