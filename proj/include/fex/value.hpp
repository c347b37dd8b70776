#pragma once

#include <compare>
#include <cstdint>
#include <optional>
#include <string>
#include <string_view>
#include <variant>

namespace fex {

/// Identifies one function instance created by the controller ("i1", "i2", ...).
/// The sequential backend allocates these too, so handles print the same way.
struct InstanceId {
  std::uint64_t counter = 0;

  friend auto operator<=>(const InstanceId&, const InstanceId&) = default;

  std::string str() const { return "i" + std::to_string(counter); }
  static std::optional<InstanceId> parse(std::string_view token);
};

/// Runtime value: 64-bit signed integer, boolean, or an instance handle.
class Value {
 public:
  Value() = default;
  static Value integer(std::int64_t v) { return Value{Repr{v}}; }
  static Value boolean(bool v) { return Value{Repr{v}}; }
  static Value handle(InstanceId id) { return Value{Repr{id}}; }

  bool is_int() const { return std::holds_alternative<std::int64_t>(repr_); }
  bool is_bool() const { return std::holds_alternative<bool>(repr_); }
  bool is_handle() const { return std::holds_alternative<InstanceId>(repr_); }

  std::int64_t as_int() const { return std::get<std::int64_t>(repr_); }
  bool as_bool() const { return std::get<bool>(repr_); }
  InstanceId as_handle() const { return std::get<InstanceId>(repr_); }

  /// "Int 55", "Bool true", "Handle i3"
  std::string describe() const;
  /// Bare rendering used in traces and CLI output: "55", "true", "i3".
  std::string str() const;

  friend bool operator==(const Value&, const Value&) = default;

 private:
  using Repr = std::variant<std::int64_t, bool, InstanceId>;
  explicit Value(Repr r) : repr_(r) {}
  Repr repr_{std::int64_t{0}};
};

enum class ErrorKind {
  DivisionByZero,
  IntegerOverflow,
  TypeError,
  StackOverflow,
  StepLimitExceeded,
  WaitConsumed,
  WaitOnNonHandle,
  UnknownInstance,
  Deadlock,
};

std::string_view error_name(ErrorKind kind);
std::optional<ErrorKind> error_from_name(std::string_view name);

struct RuntimeError {
  ErrorKind kind;
  std::string message;

  std::string name() const { return std::string(error_name(kind)); }
  /// Errors compare by kind; messages are diagnostics only.
  friend bool operator==(const RuntimeError& a, const RuntimeError& b) { return a.kind == b.kind; }
};

struct Limits {
  std::uint64_t max_frames = 100'000;
  std::uint64_t max_steps = 100'000'000;
};

/// Result of running a program under any backend.
struct Outcome {
  std::variant<Value, RuntimeError> result;
  std::uint64_t steps = 0;
  std::string trace_ref;

  bool ok() const { return std::holds_alternative<Value>(result); }
  const Value& value() const { return std::get<Value>(result); }
  const RuntimeError& error() const { return std::get<RuntimeError>(result); }
  /// "Int 55" or "error: DivisionByZero"
  std::string describe() const;
};

}  // namespace fex
