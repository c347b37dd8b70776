#include <atomic>
#include <condition_variable>
#include <deque>
#include <memory>
#include <mutex>
#include <random>
#include <thread>

#include "fex/runtime.hpp"
#include "fex/seqmodel.hpp"

namespace fex::rt {

namespace {

using trace::EventKind;
using trace::TraceEvent;

struct Actor {
  ActorId id;
  seq::MachineState machine;
  bool body_started = false;
  // Set when a blocking wait is answered; applied when the actor next runs.
  std::optional<Completion> reply;
  InstanceId replied_for;
};

class Engine {
 public:
  Engine(const lang::CheckedProgram& program, sched::Policy policy, ExecMode mode, trace::TraceSink& sink,
         Limits limits)
      : program_(program), mode_(mode), sink_(sink), limits_(limits), ctl_(policy), rng_(mode.seed) {}

  Outcome run() {
    Limits per_actor = limits_;
    per_actor.max_steps = UINT64_MAX;
    main_ = std::make_unique<Actor>();
    main_->id = ActorId::main();
    main_->machine = seq::instance_state(program_.entry(), {}, 1, per_actor);
    ready_.push_back(main_.get());

    if (mode_.kind == ExecMode::Kind::Simulated) {
      simulate();
    } else {
      std::vector<std::thread> workers;
      for (std::size_t i = 0; i < std::max<std::size_t>(1, mode_.workers); ++i) {
        workers.emplace_back([this] { work(); });
      }
      for (auto& t : workers) t.join();
    }

    Outcome out;
    out.result = *result_;
    out.steps = steps_.load();
    out.trace_ref = sink_.name();
    sink_.set_summary(trace::RunSummary::from(out));
    return out;
  }

 private:
  using Lock = std::unique_lock<std::mutex>;

  void simulate() {
    for (;;) {
      Actor* next = nullptr;
      {
        Lock lock(mu_);
        if (finished_) return;
        if (ready_.empty()) {
          finish(RuntimeError{ErrorKind::Deadlock, "no runnable actor"});
          return;
        }
        auto pick = static_cast<std::ptrdiff_t>(rng_() % ready_.size());
        next = ready_[static_cast<std::size_t>(pick)];
        ready_.erase(ready_.begin() + pick);
      }
      turn(next);
    }
  }

  void work() {
    Lock lock(mu_);
    for (;;) {
      cv_.wait(lock, [this] { return finished_ || !ready_.empty(); });
      if (finished_) return;
      Actor* next = ready_.front();
      ready_.pop_front();
      ++busy_;
      lock.unlock();
      turn(next);
      lock.lock();
      --busy_;
      if (!finished_ && ready_.empty() && busy_ == 0) {
        finish(RuntimeError{ErrorKind::Deadlock, "no runnable actor"});
      }
    }
  }

  // Runs one actor until it blocks, parks, or completes.
  void turn(Actor* a) {
    {
      Lock lock(mu_);
      if (finished_) return;
      if (a->id.instance && !a->body_started) {
        a->body_started = true;
        record(instance_event(*a, EventKind::BODY_START));
      }
      if (a->reply) {
        TraceEvent consumed;
        consumed.actor = a->id.name();
        consumed.kind = EventKind::RETURN_CONSUMED;
        consumed.instance = a->replied_for;
        consumed.detail.set(std::string(trace::kResumes), a->id.name());
        record(std::move(consumed));
        apply_reply(*a, std::move(*a->reply));
        a->reply.reset();
      }
    }
    for (;;) {
      if (abort_.load(std::memory_order_relaxed)) return;
      auto r = seq::step(a->machine, program_);
      if (r.effect.kind == seq::Effect::Kind::None) {
        if (!count_step()) return;
        continue;
      }
      switch (r.effect.kind) {
        case seq::Effect::Kind::Request:
          if (!count_step()) return;
          if (!on_request(*a, r.effect)) return;
          break;
        case seq::Effect::Kind::Wait:
          if (!count_step()) return;
          if (!on_wait(*a, r.effect.wait_on)) return;
          break;
        case seq::Effect::Kind::Finished:
        case seq::Effect::Kind::Failed:
          on_done(a);
          return;
        case seq::Effect::Kind::None:
          break;
      }
    }
  }

  bool count_step() {
    if (steps_.fetch_add(1, std::memory_order_relaxed) + 1 <= limits_.max_steps) return true;
    Lock lock(mu_);
    finish(RuntimeError{ErrorKind::StepLimitExceeded, "exceeded " + std::to_string(limits_.max_steps) + " steps"});
    return false;
  }

  // Returns false when the actor must stop running (parked under Inline).
  bool on_request(Actor& a, const seq::Effect& effect) {
    std::uint64_t depth = a.machine.depth() + 1;
    if (depth > limits_.max_frames) {
      seq::fail(a.machine, RuntimeError{ErrorKind::StackOverflow, "call to '" + effect.callee->name + "' exceeds " +
                                                                      std::to_string(limits_.max_frames) + " frames"});
      return true;
    }
    Lock lock(mu_);
    if (finished_) return false;
    const bool parks = ctl_.sched.policy.suspends_invoker();
    TraceEvent sent;
    sent.actor = a.id.name();
    sent.kind = EventKind::REQUEST_SENT;
    sent.fn = effect.callee->name;
    sent.detail.set("args", seq::render_args(effect.args));
    sent.detail.set("mode", effect.sync ? "sync" : "async");
    if (parks) sent.detail.set(std::string(trace::kSuspends), a.id.name());
    record(std::move(sent));

    CallRequest req{a.id, effect.callee, effect.args, effect.sync ? CallRequest::Mode::Sync : CallRequest::Mode::Async};
    auto inv = handle_invoke(ctl_, std::move(req));
    depths_[inv.id] = depth;
    record_all(std::move(inv.events));
    seq::resume(a.machine, Value::handle(inv.id));
    process_admits(inv.admits);
    return !parks;
  }

  bool on_wait(Actor& a, InstanceId id) {
    Lock lock(mu_);
    if (finished_) return false;
    auto w = handle_wait(ctl_, a.id, id);
    record_all(std::move(w.events));
    switch (w.status) {
      case WaitResult::Status::Rejected:
        seq::fail(a.machine, *w.rejection);
        return true;
      case WaitResult::Status::Ready:
        apply_reply(a, std::move(*w.ready));
        return true;
      case WaitResult::Status::Blocked:
        process_admits(w.admits);
        return false;
    }
    return false;
  }

  void on_done(Actor* a) {
    Completion c = a->machine.result->index() == 0 ? Completion{std::get<Value>(*a->machine.result)}
                                                   : Completion{std::get<RuntimeError>(*a->machine.result)};
    Lock lock(mu_);
    if (finished_) return;
    if (!a->id.instance) {
      if (auto* err = std::get_if<RuntimeError>(&c)) {
        finish(*err);
        return;
      }
      main_value_ = std::get<Value>(c);
      auto d = drain(ctl_);
      process_admits(d.admits);
      maybe_finish();
      return;
    }
    InstanceId id = *a->id.instance;
    record(instance_event(*a, EventKind::BODY_END));
    TraceEvent sent = instance_event(*a, EventKind::RETURN_SENT);
    if (auto* v = std::get_if<Value>(&c)) {
      sent.detail.set("value", v->str());
    } else {
      sent.detail.set("error", std::get<RuntimeError>(c).name());
    }
    record(std::move(sent));

    auto cr = handle_completion(ctl_, id, c);
    record_all(std::move(cr.events));
    if (cr.delivered_to) {
      Actor* waiter = find(*cr.delivered_to);
      waiter->reply = c;
      waiter->replied_for = id;
      // Instances re-enter through the policy (Admit); main resumes directly.
      if (!waiter->id.instance) make_ready(waiter);
    }
    if (cr.unparked) make_ready(find(*cr.unparked));
    actors_.erase(id);
    depths_.erase(id);
    process_admits(cr.admits);
    maybe_finish();
  }

  void apply_reply(Actor& a, Completion c) {
    if (auto* v = std::get_if<Value>(&c)) {
      seq::resume(a.machine, *v);
    } else {
      seq::fail(a.machine, std::get<RuntimeError>(c));
    }
  }

  void process_admits(const std::vector<sched::Admit>& admits) {
    for (const auto& admit_action : admits) {
      InstanceId id = admit_action.id;
      if (ctl_.pending.count(id)) {
        std::vector<TraceEvent> events;
        CallRequest req = admit(ctl_, id, events);
        record_all(std::move(events));
        auto actor = std::make_unique<Actor>();
        actor->id = ActorId::of(id);
        Limits per_actor = limits_;
        per_actor.max_steps = UINT64_MAX;
        actor->machine = seq::instance_state(*req.fn, req.args, depths_.at(id), per_actor);
        Actor* raw = actor.get();
        actors_.emplace(id, std::move(actor));
        make_ready(raw);
      } else if (auto it = actors_.find(id); it != actors_.end()) {
        make_ready(it->second.get());
      }
    }
  }

  void maybe_finish() {
    if (!main_value_ || finished_ || !ctl_.pending.empty() || !ctl_.running.empty()) return;
    auto d = finish_drain(ctl_);
    record_all(std::move(d.events));
    if (d.error) {
      finish(*d.error);
    } else {
      finish(*main_value_);
    }
  }

  void finish(Completion result) {
    if (finished_) return;
    finished_ = true;
    result_ = std::move(result);
    abort_.store(true);
    cv_.notify_all();
  }

  Actor* find(const ActorId& id) {
    if (!id.instance) return main_.get();
    return actors_.at(*id.instance).get();
  }

  void make_ready(Actor* a) {
    ready_.push_back(a);
    cv_.notify_one();
  }

  TraceEvent instance_event(const Actor& a, EventKind kind) {
    TraceEvent e;
    e.actor = a.id.name();
    e.kind = kind;
    e.instance = a.id.instance;
    e.fn = a.machine.stack.front().fn_name;
    return e;
  }

  void record(TraceEvent e) { sink_.record(std::move(e)); }
  void record_all(std::vector<TraceEvent> events) {
    for (auto& e : events) sink_.record(std::move(e));
  }

  const lang::CheckedProgram& program_;
  ExecMode mode_;
  trace::TraceSink& sink_;
  Limits limits_;

  std::mutex mu_;
  std::condition_variable cv_;
  ControllerState ctl_;
  std::unique_ptr<Actor> main_;
  std::map<InstanceId, std::unique_ptr<Actor>> actors_;
  std::map<InstanceId, std::uint64_t> depths_;
  std::deque<Actor*> ready_;
  std::size_t busy_ = 0;
  std::mt19937_64 rng_;

  std::atomic<std::uint64_t> steps_{0};
  std::atomic<bool> abort_{false};
  bool finished_ = false;
  std::optional<Value> main_value_;
  std::optional<Completion> result_;
};

}  // namespace

Outcome run_abstract(const lang::CheckedProgram& program, sched::Policy policy, ExecMode mode,
                     trace::TraceSink& sink, Limits limits) {
  Engine engine(program, policy, mode, sink, limits);
  return engine.run();
}

}  // namespace fex::rt
