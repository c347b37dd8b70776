#include <array>

#include "fex/trace.hpp"

namespace fex::trace {

namespace {

constexpr std::array<std::string_view, 27> kKindNames = {
    "FRAME_PUSH",       "CONTROL_TRANSFER", "SAVE_STATE",       "LOCALS_ALLOC",     "BODY_START",
    "BODY_END",         "RETURN_STORED",    "LOCALS_FREED",     "RESTORE_STATE",    "CONTROL_RETURN",
    "RETURN_TAKEN",     "FRAME_POP",        "REQUEST_SENT",     "REQUEST_RECEIVED", "ID_ASSIGNED",
    "INSTANCE_CREATED", "ENV_SETUP",        "ARGS_DELIVERED",   "ARGS_RECEIVED",    "RETURN_SENT",
    "RETURN_RECEIVED",  "ENV_TEARDOWN",     "INSTANCE_DISPOSED", "RETURN_DELIVERED", "RETURN_CONSUMED",
    "WAIT_REQUESTED",   "RESULT_DISCARDED",
};

}  // namespace

std::string_view kind_name(EventKind kind) { return kKindNames.at(static_cast<std::size_t>(kind)); }

std::optional<EventKind> kind_from_name(std::string_view name) {
  for (std::size_t i = 0; i < kKindNames.size(); ++i) {
    if (kKindNames[i] == name) return static_cast<EventKind>(i);
  }
  return std::nullopt;
}

bool is_sequential_kind(EventKind kind) { return kind <= EventKind::FRAME_POP; }

void Detail::set(std::string key, std::string value) {
  for (auto& [k, v] : items_) {
    if (k == key) {
      v = std::move(value);
      return;
    }
  }
  items_.emplace_back(std::move(key), std::move(value));
}

std::optional<std::string_view> Detail::get(std::string_view key) const {
  for (const auto& [k, v] : items_) {
    if (k == key) return std::string_view(v);
  }
  return std::nullopt;
}

std::string controller_actor() { return "controller"; }
std::string caller_actor(std::string_view fn) { return "caller:" + std::string(fn); }
std::string instance_actor(InstanceId id) { return "instance:" + id.str(); }
std::string executor_actor(std::size_t index) { return "executor:" + std::to_string(index); }

RunSummary RunSummary::from(const Outcome& outcome) {
  RunSummary s;
  if (outcome.ok()) {
    s.result = outcome.value();
  } else {
    s.error = outcome.error().name();
  }
  return s;
}

TraceSink::TraceSink(std::string name, Storage storage) : name_(std::move(name)), storage_(storage) {}

std::uint64_t TraceSink::record(TraceEvent event) {
  std::lock_guard lock(mu_);
  if (closed_) throw SinkClosed();
  event.seq = next_seq_++;
  if (storage_ == Storage::Keep) trace_.events.push_back(std::move(event));
  return next_seq_ - 1;
}

void TraceSink::close() {
  std::lock_guard lock(mu_);
  closed_ = true;
}

bool TraceSink::closed() const {
  std::lock_guard lock(mu_);
  return closed_;
}

void TraceSink::set_summary(RunSummary summary) {
  std::lock_guard lock(mu_);
  trace_.summary = std::move(summary);
}

Trace TraceSink::snapshot() const {
  std::lock_guard lock(mu_);
  return trace_;
}

std::uint64_t TraceSink::count() const {
  std::lock_guard lock(mu_);
  return next_seq_ - 1;
}

}  // namespace fex::trace
