#include "fex/value.hpp"

#include <array>
#include <charconv>

namespace fex {

std::optional<InstanceId> InstanceId::parse(std::string_view token) {
  if (token.size() < 2 || token.front() != 'i') return std::nullopt;
  std::uint64_t n = 0;
  auto digits = token.substr(1);
  auto [ptr, ec] = std::from_chars(digits.data(), digits.data() + digits.size(), n);
  if (ec != std::errc{} || ptr != digits.data() + digits.size() || n == 0) return std::nullopt;
  return InstanceId{n};
}

std::string Value::describe() const {
  if (is_int()) return "Int " + std::to_string(as_int());
  if (is_bool()) return as_bool() ? "Bool true" : "Bool false";
  return "Handle " + as_handle().str();
}

std::string Value::str() const {
  if (is_int()) return std::to_string(as_int());
  if (is_bool()) return as_bool() ? "true" : "false";
  return as_handle().str();
}

namespace {

constexpr std::array<std::string_view, 9> kErrorNames = {
    "DivisionByZero", "IntegerOverflow", "TypeError",       "StackOverflow", "StepLimitExceeded",
    "WaitConsumed",   "WaitOnNonHandle", "UnknownInstance", "Deadlock",
};

}  // namespace

std::string_view error_name(ErrorKind kind) { return kErrorNames.at(static_cast<std::size_t>(kind)); }

std::optional<ErrorKind> error_from_name(std::string_view name) {
  for (std::size_t i = 0; i < kErrorNames.size(); ++i) {
    if (kErrorNames[i] == name) return static_cast<ErrorKind>(i);
  }
  return std::nullopt;
}

std::string Outcome::describe() const {
  if (ok()) return value().describe();
  return "error: " + error().name();
}

}  // namespace fex
