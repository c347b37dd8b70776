#pragma once

#include <cstdint>
#include <optional>
#include <random>
#include <string>
#include <vector>

#include "fex/lang.hpp"
#include "fex/value.hpp"

namespace fex::testing {

/// Independent oracle: a direct recursive evaluator over the AST. It shares no
/// code with the backends beyond the AST and value types.
struct RefResult {
  std::optional<Value> value;
  std::optional<ErrorKind> error;

  friend bool operator==(const RefResult&, const RefResult&) = default;
};

RefResult reference_run(const lang::Program& program, std::uint64_t max_frames = 5000);
RefResult reference_call(const lang::Program& program, const std::string& fn, const std::vector<std::int64_t>& args,
                         std::uint64_t max_frames = 5000);

/// Outcome in the oracle's terms, for direct comparison.
RefResult as_ref(const Outcome& outcome);
std::string describe(const RefResult& r);

/// A random terminating program: helpers g0..g{n-1}, each calling only earlier
/// helpers, and a target `f`. No invoke or wait inside the functions.
struct RandomProgram {
  std::string functions;  // source text without main
  std::string target = "f";
  std::vector<std::int64_t> args;

  std::string with_main(const std::string& main_body) const;
  std::string call_text() const;
};

RandomProgram random_program(std::mt19937_64& rng);

/// Reads a corpus file into a string.
std::string read_text(const std::string& path);

/// Sorted list of `*.fx` files under `dir`.
std::vector<std::string> corpus_files(const std::string& dir);

}  // namespace fex::testing
