#pragma once

#include <atomic>
#include <cstdint>
#include <iosfwd>
#include <mutex>
#include <optional>
#include <stdexcept>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "fex/value.hpp"

namespace fex::trace {

// Sequential calling-convention steps, then controller/scheduler protocol steps.
// BODY_START and BODY_END belong to both vocabularies.
enum class EventKind {
  FRAME_PUSH,
  CONTROL_TRANSFER,
  SAVE_STATE,
  LOCALS_ALLOC,
  BODY_START,
  BODY_END,
  RETURN_STORED,
  LOCALS_FREED,
  RESTORE_STATE,
  CONTROL_RETURN,
  RETURN_TAKEN,
  FRAME_POP,
  REQUEST_SENT,
  REQUEST_RECEIVED,
  ID_ASSIGNED,
  INSTANCE_CREATED,
  ENV_SETUP,
  ARGS_DELIVERED,
  ARGS_RECEIVED,
  RETURN_SENT,
  RETURN_RECEIVED,
  ENV_TEARDOWN,
  INSTANCE_DISPOSED,
  RETURN_DELIVERED,
  RETURN_CONSUMED,
  WAIT_REQUESTED,
  RESULT_DISCARDED,
};

std::string_view kind_name(EventKind kind);
std::optional<EventKind> kind_from_name(std::string_view name);
bool is_sequential_kind(EventKind kind);

/// Ordered key/value payload; values are rendered as text.
class Detail {
 public:
  Detail() = default;
  Detail(std::initializer_list<std::pair<std::string, std::string>> items) : items_(items) {}

  void set(std::string key, std::string value);
  std::optional<std::string_view> get(std::string_view key) const;
  const std::vector<std::pair<std::string, std::string>>& items() const { return items_; }

  friend bool operator==(const Detail&, const Detail&) = default;

 private:
  std::vector<std::pair<std::string, std::string>> items_;
};

// Detail keys the runtime uses to mark an actor leaving or re-entering execution
// without finishing its body (blocking wait, inline invoke).
inline constexpr std::string_view kSuspends = "suspends";
inline constexpr std::string_view kResumes = "resumes";

std::string controller_actor();
std::string caller_actor(std::string_view fn);
std::string instance_actor(InstanceId id);
std::string executor_actor(std::size_t index);

struct TraceEvent {
  std::uint64_t seq = 0;
  std::string actor;
  EventKind kind = EventKind::FRAME_PUSH;
  std::optional<InstanceId> instance;
  std::optional<std::string> fn;
  Detail detail;

  friend bool operator==(const TraceEvent&, const TraceEvent&) = default;
};

/// The closing RUN_END line of a trace file.
struct RunSummary {
  std::optional<Value> result;
  std::optional<std::string> error;

  static RunSummary from(const Outcome& outcome);
  friend bool operator==(const RunSummary&, const RunSummary&) = default;
};

struct Trace {
  std::vector<TraceEvent> events;
  std::optional<RunSummary> summary;

  bool ended_in_error() const { return summary && summary->error.has_value(); }
};

class SinkClosed : public std::logic_error {
 public:
  SinkClosed() : std::logic_error("trace sink is closed") {}
};

class MalformedTrace : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Collects events under one global sequence. `record` may be called from any
/// executor; seq assignment and append happen together, so the stored events are
/// always in seq order.
class TraceSink {
 public:
  enum class Storage { Keep, CountOnly };

  explicit TraceSink(std::string name = "trace", Storage storage = Storage::Keep);

  std::uint64_t record(TraceEvent event);
  void close();
  bool closed() const;

  void set_summary(RunSummary summary);
  /// Copy of everything recorded so far.
  Trace snapshot() const;
  std::uint64_t count() const;
  const std::string& name() const { return name_; }

 private:
  std::string name_;
  Storage storage_;
  mutable std::mutex mu_;
  std::uint64_t next_seq_ = 1;
  bool closed_ = false;
  Trace trace_;
};

/// One JSON object per line, closed by a RUN_END summary line.
void write_jsonl(const Trace& trace, std::ostream& out);
std::string to_jsonl(const Trace& trace);
void write_jsonl_file(const Trace& trace, const std::string& path);
/// Throws MalformedTrace on bad JSON, unknown kinds, or non-monotone seq.
Trace read_jsonl(std::istream& in);
Trace read_jsonl_file(const std::string& path);

enum class Scheme { Sequential, Controller, Scheduler };

std::optional<Scheme> scheme_from_name(std::string_view name);
std::string_view scheme_name(Scheme scheme);

struct Violation {
  std::uint64_t seq = 0;
  std::string rule;
  std::string expected;
  std::string found;
};

/// Empty iff the trace conforms. Reports at most one violation per call cycle
/// or instance id (the first offending event). Throws MalformedTrace when seq is
/// not strictly increasing.
std::vector<Violation> check_conformance(const Trace& trace, Scheme scheme);

/// True when `scheme` requires `first` to precede `second` for the same call
/// or instance; used to build mutation tests.
bool strictly_ordered(Scheme scheme, EventKind first, EventKind second);

struct ComparisonRow {
  std::string label;
  std::string result;
  std::uint64_t steps = 0;
  bool agrees = true;
};

struct EqualityReport {
  bool equal = true;
  std::string reference;
  std::vector<ComparisonRow> rows;
  std::vector<std::string> dissenting;

  /// "equal (Int 55)", "equal (error: DivisionByZero)" or "MISMATCH: ..."
  std::string summary() const;
};

/// Pairwise result comparison. The majority result (first-seen on ties) is the
/// reference; step counts are informational only.
EqualityReport compare_outcomes(const std::vector<std::pair<std::string, Outcome>>& outcomes);

}  // namespace fex::trace
