#include <algorithm>
#include <map>
#include <set>

#include "fex/trace.hpp"

namespace fex::trace {

namespace {

using K = EventKind;

const std::vector<EventKind> kCallCycle = {
    K::FRAME_PUSH,    K::CONTROL_TRANSFER, K::SAVE_STATE,     K::LOCALS_ALLOC,
    K::BODY_START,    K::BODY_END,         K::RETURN_STORED,  K::LOCALS_FREED,
    K::RESTORE_STATE, K::CONTROL_RETURN,   K::RETURN_TAKEN,   K::FRAME_POP,
};

struct Lifecycle {
  std::vector<EventKind> chain;
  std::vector<std::vector<EventKind>> tails;
  std::set<EventKind> instance_owned;
};

const Lifecycle& lifecycle(Scheme scheme) {
  static const Lifecycle controller{
      {K::ID_ASSIGNED, K::INSTANCE_CREATED, K::ENV_SETUP, K::ARGS_DELIVERED, K::ARGS_RECEIVED, K::BODY_START,
       K::BODY_END, K::RETURN_SENT, K::RETURN_RECEIVED, K::ENV_TEARDOWN, K::INSTANCE_DISPOSED},
      {{K::RETURN_DELIVERED, K::RETURN_CONSUMED}, {K::RESULT_DISCARDED}},
      {K::ARGS_RECEIVED, K::BODY_START, K::BODY_END, K::RETURN_SENT},
  };
  // Coarser view: environment set-up, execution, tear-down, and id-matched delivery.
  static const Lifecycle scheduler{
      {K::ID_ASSIGNED, K::ENV_SETUP, K::ARGS_DELIVERED, K::BODY_START, K::BODY_END, K::ENV_TEARDOWN},
      {{K::RETURN_DELIVERED}, {K::RESULT_DISCARDED}},
      {K::BODY_START, K::BODY_END},
  };
  return scheme == Scheme::Scheduler ? scheduler : controller;
}

bool tracked(const Lifecycle& lc, EventKind k) {
  if (std::find(lc.chain.begin(), lc.chain.end(), k) != lc.chain.end()) return true;
  for (const auto& tail : lc.tails) {
    if (std::find(tail.begin(), tail.end(), k) != tail.end()) return true;
  }
  return false;
}

std::string names(const std::vector<EventKind>& kinds) {
  std::string out;
  for (auto k : kinds) {
    if (!out.empty()) out += " | ";
    out += kind_name(k);
  }
  return out;
}

std::string describe_event(const TraceEvent& e) {
  std::string out(kind_name(e.kind));
  if (e.instance) out += "(" + e.instance->str() + ")";
  out += " by " + e.actor;
  return out;
}

void require_monotone(const Trace& trace) {
  std::uint64_t last = 0;
  for (const auto& e : trace.events) {
    if (e.seq <= last) throw MalformedTrace("seq " + std::to_string(e.seq) + " does not increase");
    last = e.seq;
  }
}

std::vector<Violation> check_sequential(const Trace& trace) {
  struct Cycle {
    std::optional<std::string> fn;
    std::size_t next = 0;
  };
  std::vector<Violation> out;
  std::vector<Cycle> stack;
  bool root_seen = false;
  const std::size_t body_end = 5;

  for (const auto& e : trace.events) {
    if (!is_sequential_kind(e.kind)) {
      out.push_back({e.seq, "sequential-vocabulary", "calling-convention step", describe_event(e)});
      return out;
    }
    if (e.kind == K::FRAME_PUSH) {
      if (stack.empty() && root_seen) {
        out.push_back({e.seq, "single-entry", "no call after the entry frame returned", describe_event(e)});
        return out;
      }
      if (!stack.empty() && stack.back().next != body_end) {
        out.push_back({e.seq, "call-from-running-body", std::string(kind_name(kCallCycle[stack.back().next])),
                       describe_event(e)});
        return out;
      }
      root_seen = true;
      stack.push_back({e.fn, 1});
      continue;
    }
    if (stack.empty()) {
      out.push_back({e.seq, "frame-balance", "FRAME_PUSH", describe_event(e)});
      return out;
    }
    Cycle& top = stack.back();
    EventKind expected = kCallCycle[top.next];
    if (e.kind != expected) {
      out.push_back({e.seq, "call-cycle-order", std::string(kind_name(expected)), describe_event(e)});
      return out;
    }
    if (top.fn && e.fn && *top.fn != *e.fn) {
      out.push_back({e.seq, "call-cycle-function", *top.fn, *e.fn});
      return out;
    }
    if (++top.next == kCallCycle.size()) stack.pop_back();
  }
  if (!stack.empty() && !trace.ended_in_error()) {
    std::uint64_t last = trace.events.empty() ? 0 : trace.events.back().seq;
    out.push_back({last, "frame-balance", "FRAME_POP for " + std::to_string(stack.size()) + " open frame(s)",
                   "end of trace"});
  }
  return out;
}

struct IdState {
  std::size_t stage = 0;
  int tail = -1;
  std::size_t tail_pos = 0;
  bool failed = false;
  std::set<std::string> waiters;
  std::optional<std::string> delivered_to;
};

class LifecycleChecker {
 public:
  LifecycleChecker(const Trace& trace, Scheme scheme) : trace_(trace), lc_(lifecycle(scheme)) {}

  std::vector<Violation> run() {
    for (const auto& e : trace_.events) visit(e);
    if (!trace_.ended_in_error()) {
      std::uint64_t last = trace_.events.empty() ? 0 : trace_.events.back().seq;
      for (const auto& [id, st] : ids_) {
        if (st.failed || complete(st)) continue;
        out_.push_back({last, "lifecycle-complete:" + InstanceId{id}.str(), expected_text(st), "end of trace"});
      }
    }
    std::stable_sort(out_.begin(), out_.end(), [](const Violation& a, const Violation& b) { return a.seq < b.seq; });
    return std::move(out_);
  }

 private:
  bool complete(const IdState& st) const {
    return st.stage == lc_.chain.size() && st.tail >= 0 &&
           st.tail_pos == lc_.tails[static_cast<std::size_t>(st.tail)].size();
  }

  std::string expected_text(const IdState& st) const {
    if (st.stage < lc_.chain.size()) return std::string(kind_name(lc_.chain[st.stage]));
    if (st.tail < 0) {
      std::vector<EventKind> starts;
      for (const auto& t : lc_.tails) starts.push_back(t.front());
      return names(starts);
    }
    const auto& tail = lc_.tails[static_cast<std::size_t>(st.tail)];
    if (st.tail_pos < tail.size()) return std::string(kind_name(tail[st.tail_pos]));
    return "no further events";
  }

  void fail(IdState& st, const TraceEvent& e, std::string rule, std::string expected) {
    st.failed = true;
    out_.push_back({e.seq, std::move(rule), std::move(expected), describe_event(e)});
  }

  void visit(const TraceEvent& e) {
    if (is_sequential_kind(e.kind) && e.kind != K::BODY_START && e.kind != K::BODY_END) {
      out_.push_back({e.seq, "controller-vocabulary", "protocol step", describe_event(e)});
      return;
    }
    if (e.kind == K::REQUEST_SENT) {
      ++unreceived_;
      return;
    }
    if (e.kind == K::REQUEST_RECEIVED) {
      if (unreceived_ == 0) {
        out_.push_back({e.seq, "request-received-after-sent", "REQUEST_SENT", describe_event(e)});
      } else {
        --unreceived_;
      }
      ++unassigned_;
      return;
    }
    if (!e.instance) {
      out_.push_back({e.seq, "event-carries-id", "instance id", describe_event(e)});
      return;
    }
    std::uint64_t id = e.instance->counter;
    IdState& st = ids_[id];
    if (st.failed) return;

    if (e.kind == K::ID_ASSIGNED) {
      if (unassigned_ == 0) {
        fail(st, e, "id-assigned-on-request", "REQUEST_RECEIVED");
        return;
      }
      --unassigned_;
      if (st.stage != 0) {
        fail(st, e, "id-assigned-once", expected_text(st));
        return;
      }
      if (id != last_assigned_ + 1) {
        fail(st, e, "id-allocation-order", InstanceId{last_assigned_ + 1}.str());
        return;
      }
      last_assigned_ = id;
    }
    if (e.kind == K::WAIT_REQUESTED) {
      if (st.stage == 0) {
        fail(st, e, "wait-after-id-assigned", "ID_ASSIGNED");
      } else {
        st.waiters.insert(e.actor);
      }
      return;
    }
    if (!tracked(lc_, e.kind)) return;

    if (lc_.instance_owned.count(e.kind) && e.actor != instance_actor(*e.instance)) {
      fail(st, e, "instance-owned-step", instance_actor(*e.instance));
      return;
    }
    if (!lc_.instance_owned.count(e.kind) && e.kind != K::RETURN_CONSUMED && e.actor != controller_actor()) {
      fail(st, e, "controller-owned-step", controller_actor());
      return;
    }

    if (!advance(st, e.kind)) {
      std::string rule = st.stage < lc_.chain.size() || st.tail < 0 ? "lifecycle-order" : "lifecycle-ended";
      fail(st, e, rule, expected_text(st));
      return;
    }

    if (e.kind == K::RETURN_DELIVERED) {
      auto to = e.detail.get("to");
      if (!to || !st.waiters.count(std::string(*to))) {
        fail(st, e, "deliver-only-to-waiter", "WAIT_REQUESTED by the receiving actor");
        return;
      }
      st.delivered_to = std::string(*to);
    }
    if (e.kind == K::RETURN_CONSUMED && st.delivered_to && *st.delivered_to != e.actor) {
      fail(st, e, "consumed-by-receiver", *st.delivered_to);
    }
  }

  bool advance(IdState& st, EventKind k) {
    if (st.stage < lc_.chain.size()) {
      if (lc_.chain[st.stage] != k) return false;
      ++st.stage;
      return true;
    }
    if (st.tail < 0) {
      for (std::size_t i = 0; i < lc_.tails.size(); ++i) {
        if (lc_.tails[i].front() == k) {
          st.tail = static_cast<int>(i);
          st.tail_pos = 1;
          return true;
        }
      }
      return false;
    }
    const auto& tail = lc_.tails[static_cast<std::size_t>(st.tail)];
    if (st.tail_pos < tail.size() && tail[st.tail_pos] == k) {
      ++st.tail_pos;
      return true;
    }
    return false;
  }

  const Trace& trace_;
  const Lifecycle& lc_;
  std::map<std::uint64_t, IdState> ids_;
  std::vector<Violation> out_;
  std::size_t unreceived_ = 0;
  std::size_t unassigned_ = 0;
  std::uint64_t last_assigned_ = 0;
};

std::ptrdiff_t position(const std::vector<EventKind>& seq, EventKind k) {
  auto it = std::find(seq.begin(), seq.end(), k);
  return it == seq.end() ? -1 : it - seq.begin();
}

}  // namespace

std::optional<Scheme> scheme_from_name(std::string_view name) {
  if (name == "sequential") return Scheme::Sequential;
  if (name == "controller") return Scheme::Controller;
  if (name == "scheduler") return Scheme::Scheduler;
  return std::nullopt;
}

std::string_view scheme_name(Scheme scheme) {
  switch (scheme) {
    case Scheme::Sequential: return "sequential";
    case Scheme::Controller: return "controller";
    case Scheme::Scheduler: return "scheduler";
  }
  return "?";
}

std::vector<Violation> check_conformance(const Trace& trace, Scheme scheme) {
  require_monotone(trace);
  if (scheme == Scheme::Sequential) return check_sequential(trace);
  return LifecycleChecker(trace, scheme).run();
}

bool strictly_ordered(Scheme scheme, EventKind first, EventKind second) {
  if (scheme == Scheme::Sequential) {
    auto a = position(kCallCycle, first);
    auto b = position(kCallCycle, second);
    return a >= 0 && b >= 0 && a < b;
  }
  const Lifecycle& lc = lifecycle(scheme);
  if (first == K::ID_ASSIGNED && second == K::WAIT_REQUESTED) return true;
  if (first == K::WAIT_REQUESTED) return second == K::RETURN_DELIVERED || second == K::RETURN_CONSUMED;
  auto rank = [&](EventKind k) -> std::optional<std::pair<std::ptrdiff_t, int>> {
    auto p = position(lc.chain, k);
    if (p >= 0) return std::pair{p, -1};
    for (std::size_t t = 0; t < lc.tails.size(); ++t) {
      auto q = position(lc.tails[t], k);
      if (q >= 0) return std::pair{static_cast<std::ptrdiff_t>(lc.chain.size()) + q, static_cast<int>(t)};
    }
    return std::nullopt;
  };
  auto a = rank(first);
  auto b = rank(second);
  if (!a || !b) return false;
  // Events in different tails are alternatives, not ordered.
  if (a->second >= 0 && b->second >= 0 && a->second != b->second) return false;
  return a->first < b->first;
}

}  // namespace fex::trace
