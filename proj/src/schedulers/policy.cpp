#include <cassert>
#include <charconv>

#include "fex/schedulers.hpp"

namespace fex::sched {

Policy Policy::pool(std::size_t capacity) {
  assert(capacity >= 1);
  return {Kind::Pool, capacity};
}

std::optional<Policy> Policy::parse(std::string_view text) {
  if (text == "inline") return inline_();
  if (text == "eager") return eager();
  if (text == "lazy") return lazy();
  constexpr std::string_view prefix = "pool:";
  if (text.substr(0, prefix.size()) != prefix) return std::nullopt;
  auto digits = text.substr(prefix.size());
  std::size_t c = 0;
  auto [ptr, ec] = std::from_chars(digits.data(), digits.data() + digits.size(), c);
  if (ec != std::errc{} || ptr != digits.data() + digits.size() || c == 0) return std::nullopt;
  return pool(c);
}

std::string Policy::name() const {
  switch (kind) {
    case Kind::Inline: return "inline";
    case Kind::Eager: return "eager";
    case Kind::Lazy: return "lazy";
    case Kind::Pool: return "pool:" + std::to_string(capacity);
  }
  return "?";
}

namespace {

void fill_slots(SchedState& s, std::vector<Admit>& out) {
  while (!s.admit_queue.empty() && s.run_slots_in_use < s.policy.capacity) {
    ++s.run_slots_in_use;
    out.push_back({s.admit_queue.front()});
    s.admit_queue.pop_front();
  }
}

std::vector<Admit> pool_event(SchedState& s, SchedEvent e) {
  std::vector<Admit> out;
  switch (e.kind) {
    case SchedEvent::Kind::InvokeArrived:
    case SchedEvent::Kind::InstanceResumed:
      s.admit_queue.push_back(e.id);
      break;
    case SchedEvent::Kind::InstanceBlocked:
    case SchedEvent::Kind::InstanceCompleted:
      assert(s.run_slots_in_use > 0);
      --s.run_slots_in_use;
      break;
    case SchedEvent::Kind::ValueNeeded:
      break;
    case SchedEvent::Kind::Drain:
      s.draining = true;
      break;
  }
  fill_slots(s, out);
  return out;
}

std::vector<Admit> lazy_event(SchedState& s, SchedEvent e) {
  std::vector<Admit> out;
  switch (e.kind) {
    case SchedEvent::Kind::InvokeArrived:
      if (s.draining) {
        out.push_back({e.id});
      } else {
        s.admit_queue.push_back(e.id);
      }
      break;
    case SchedEvent::Kind::ValueNeeded:
      for (auto it = s.admit_queue.begin(); it != s.admit_queue.end(); ++it) {
        if (*it == e.id) {
          s.admit_queue.erase(it);
          out.push_back({e.id});
          break;
        }
      }
      break;
    case SchedEvent::Kind::InstanceResumed:
      out.push_back({e.id});
      break;
    case SchedEvent::Kind::Drain:
      s.draining = true;
      while (!s.admit_queue.empty()) {
        out.push_back({s.admit_queue.front()});
        s.admit_queue.pop_front();
      }
      break;
    case SchedEvent::Kind::InstanceBlocked:
    case SchedEvent::Kind::InstanceCompleted:
      break;
  }
  return out;
}

}  // namespace

std::vector<Admit> on_event(SchedState& state, SchedEvent event) {
  switch (state.policy.kind) {
    case Policy::Kind::Pool: return pool_event(state, event);
    case Policy::Kind::Lazy: return lazy_event(state, event);
    case Policy::Kind::Inline:
    case Policy::Kind::Eager:
      if (event.kind == SchedEvent::Kind::InvokeArrived || event.kind == SchedEvent::Kind::InstanceResumed) {
        return {Admit{event.id}};
      }
      if (event.kind == SchedEvent::Kind::Drain) state.draining = true;
      return {};
  }
  return {};
}

}  // namespace fex::sched
