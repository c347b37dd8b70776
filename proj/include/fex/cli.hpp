#pragma once

#include <functional>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include "fex/runtime.hpp"
#include "fex/schedulers.hpp"
#include "fex/value.hpp"

namespace fex::cli {

// Exit codes shared by every command.
inline constexpr int kOk = 0;
inline constexpr int kRuntimeError = 1;
inline constexpr int kInputError = 2;
inline constexpr int kNonConformant = 3;
inline constexpr int kMismatch = 4;

enum class Backend { Seq, Abstract };

/// One backend configuration: `seq`, or `abstract/<policy>/<mode>`.
struct BackendConfig {
  Backend backend = Backend::Seq;
  sched::Policy policy = sched::Policy::eager();
  rt::ExecMode mode = rt::ExecMode::simulated(0);

  std::string label() const;
  /// Accepts `seq`, `abstract/<policy>`, `abstract/<policy>/simulated:<seed>`,
  /// `abstract/<policy>/parallel:<workers>`.
  static std::optional<BackendConfig> parse(std::string_view text);
};

struct RunConfig {
  std::string program_path;
  BackendConfig config;
  std::optional<std::string> trace_path;
  Limits limits;
};

/// seq plus abstract x {inline, eager, lazy, pool:1, pool:4} x simulated(0).
std::vector<BackendConfig> default_matrix();
/// Comma-separated list of BackendConfig labels.
std::optional<std::vector<BackendConfig>> parse_matrix(std::string_view text);

/// Runs one configuration of an already loaded program.
Outcome execute(const lang::CheckedProgram& program, const BackendConfig& config, trace::TraceSink& sink,
                Limits limits);

/// Where a trace for `program_path` under `config` goes: an explicit path
/// (relative paths resolve under FEX_TRACE_DIR when set), else a generated name
/// in FEX_TRACE_DIR, else nowhere.
std::optional<std::string> trace_destination(const std::string& program_path, const BackendConfig& config,
                                             const std::optional<std::string>& explicit_path);

int cmd_run(const RunConfig& config, std::ostream& out, std::ostream& err);

/// Test hook: lets a test alter an outcome before comparison.
using OutcomeTamper = std::function<void(const std::string& label, Outcome& outcome)>;

int cmd_compare(const std::string& program_path, const std::vector<BackendConfig>& matrix, std::ostream& out,
                std::ostream& err, Limits limits = {}, const OutcomeTamper& tamper = {});

int cmd_check(const std::string& trace_path, const std::string& scheme_name, std::ostream& out, std::ostream& err);

/// Full command line entry point; never returns a code outside {0,1,2,3,4}.
int main_entry(int argc, char** argv, std::ostream& out, std::ostream& err);

}  // namespace fex::cli
