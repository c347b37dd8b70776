#include "fex/cli.hpp"

#include <charconv>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <ostream>
#include <sstream>

#include <CLI11.hpp>

#include "fex/lang.hpp"
#include "fex/seqmodel.hpp"
#include "fex/trace.hpp"

namespace fex::cli {

namespace {

namespace fs = std::filesystem;

std::optional<std::uint64_t> parse_count(std::string_view text) {
  std::uint64_t n = 0;
  auto [ptr, ec] = std::from_chars(text.data(), text.data() + text.size(), n);
  if (ec != std::errc{} || ptr != text.data() + text.size()) return std::nullopt;
  return n;
}

std::optional<std::string> read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) return std::nullopt;
  std::ostringstream buf;
  buf << in.rdbuf();
  return buf.str();
}

// Loads and checks a program, printing diagnostics as `path:line:col: ...`.
std::optional<lang::CheckedProgram> load_program(const std::string& path, std::ostream& err) {
  auto source = read_file(path);
  if (!source) {
    err << path << ": cannot read file\n";
    return std::nullopt;
  }
  try {
    return lang::load(*source);
  } catch (const lang::ParseError& e) {
    err << path << ":" << e.what() << "\n";
  } catch (const lang::ValidationFailed& e) {
    for (const auto& v : e.errors()) {
      err << path << ":" << v.pos.line << ":" << v.pos.column << ": " << lang::validation_kind_name(v.kind) << ": "
          << v.message << "\n";
    }
  }
  return std::nullopt;
}

std::string file_safe(std::string label) {
  for (char& c : label) {
    if (c == '/' || c == ':') c = '_';
  }
  return label;
}

bool write_trace(const trace::TraceSink& sink, const std::string& path, std::ostream& err) {
  try {
    trace::write_jsonl_file(sink.snapshot(), path);
    return true;
  } catch (const std::exception& e) {
    err << e.what() << "\n";
    return false;
  }
}

}  // namespace

std::string BackendConfig::label() const {
  if (backend == Backend::Seq) return "seq";
  return "abstract/" + policy.name() + "/" + mode.name();
}

std::optional<BackendConfig> BackendConfig::parse(std::string_view text) {
  BackendConfig c;
  if (text == "seq") return c;
  constexpr std::string_view prefix = "abstract/";
  if (text.substr(0, prefix.size()) != prefix) return std::nullopt;
  c.backend = Backend::Abstract;
  auto rest = text.substr(prefix.size());
  auto slash = rest.find('/');
  auto policy = sched::Policy::parse(rest.substr(0, slash));
  if (!policy) return std::nullopt;
  c.policy = *policy;
  if (slash == std::string_view::npos) return c;
  auto mode = rest.substr(slash + 1);
  auto colon = mode.find(':');
  auto kind = mode.substr(0, colon);
  std::optional<std::uint64_t> n = colon == std::string_view::npos ? std::nullopt : parse_count(mode.substr(colon + 1));
  if (kind == "simulated") {
    c.mode = rt::ExecMode::simulated(colon == std::string_view::npos ? 0 : n.value_or(UINT64_MAX));
    if (colon != std::string_view::npos && !n) return std::nullopt;
  } else if (kind == "parallel") {
    if (colon != std::string_view::npos && (!n || *n == 0)) return std::nullopt;
    c.mode = rt::ExecMode::parallel(colon == std::string_view::npos ? 4 : static_cast<std::size_t>(*n));
  } else {
    return std::nullopt;
  }
  return c;
}

std::vector<BackendConfig> default_matrix() {
  std::vector<BackendConfig> m{BackendConfig{}};
  for (auto p : {sched::Policy::inline_(), sched::Policy::eager(), sched::Policy::lazy(), sched::Policy::pool(1),
                 sched::Policy::pool(4)}) {
    m.push_back({Backend::Abstract, p, rt::ExecMode::simulated(0)});
  }
  return m;
}

std::optional<std::vector<BackendConfig>> parse_matrix(std::string_view text) {
  std::vector<BackendConfig> out;
  while (!text.empty()) {
    auto comma = text.find(',');
    auto item = text.substr(0, comma);
    auto c = BackendConfig::parse(item);
    if (!c) return std::nullopt;
    out.push_back(*c);
    if (comma == std::string_view::npos) break;
    text = text.substr(comma + 1);
  }
  if (out.empty()) return std::nullopt;
  return out;
}

Outcome execute(const lang::CheckedProgram& program, const BackendConfig& config, trace::TraceSink& sink,
                Limits limits) {
  if (config.backend == Backend::Seq) return seq::run_sequential(program, sink, limits);
  return rt::run_abstract(program, config.policy, config.mode, sink, limits);
}

std::optional<std::string> trace_destination(const std::string& program_path, const BackendConfig& config,
                                             const std::optional<std::string>& explicit_path) {
  const char* dir = std::getenv("FEX_TRACE_DIR");
  if (explicit_path) {
    fs::path p(*explicit_path);
    if (dir && *dir && p.is_relative()) return (fs::path(dir) / p).string();
    return p.string();
  }
  if (!dir || !*dir) return std::nullopt;
  auto stem = fs::path(program_path).stem().string();
  return (fs::path(dir) / (stem + "." + file_safe(config.label()) + ".jsonl")).string();
}

int cmd_run(const RunConfig& config, std::ostream& out, std::ostream& err) {
  auto program = load_program(config.program_path, err);
  if (!program) return kInputError;
  auto dest = trace_destination(config.program_path, config.config, config.trace_path);
  trace::TraceSink sink(dest.value_or(config.config.label()),
                        dest ? trace::TraceSink::Storage::Keep : trace::TraceSink::Storage::CountOnly);
  Outcome outcome = execute(*program, config.config, sink, config.limits);
  if (dest && !write_trace(sink, *dest, err)) return kInputError;
  if (!outcome.ok()) {
    err << outcome.error().name() << ": " << outcome.error().message << "\n";
    return kRuntimeError;
  }
  out << "result: " << outcome.value().str() << "\n";
  out << "steps: " << outcome.steps << "\n";
  return kOk;
}

int cmd_compare(const std::string& program_path, const std::vector<BackendConfig>& matrix, std::ostream& out,
                std::ostream& err, Limits limits, const OutcomeTamper& tamper) {
  auto program = load_program(program_path, err);
  if (!program) return kInputError;
  std::vector<std::pair<std::string, Outcome>> outcomes;
  for (const auto& config : matrix) {
    auto dest = trace_destination(program_path, config, std::nullopt);
    trace::TraceSink sink(dest.value_or(config.label()),
                          dest ? trace::TraceSink::Storage::Keep : trace::TraceSink::Storage::CountOnly);
    Outcome o = execute(*program, config, sink, limits);
    if (dest && !write_trace(sink, *dest, err)) return kInputError;
    if (tamper) tamper(config.label(), o);
    outcomes.emplace_back(config.label(), std::move(o));
  }
  auto report = trace::compare_outcomes(outcomes);
  std::size_t width = 0;
  for (const auto& row : report.rows) width = std::max(width, row.label.size());
  for (const auto& row : report.rows) {
    out << std::left << std::setw(static_cast<int>(width) + 2) << row.label << std::setw(28) << row.result
        << "steps: " << row.steps << (row.agrees ? "" : "  <-- differs") << "\n";
  }
  out << report.summary() << "\n";
  return report.equal ? kOk : kMismatch;
}

int cmd_check(const std::string& trace_path, const std::string& scheme_name, std::ostream& out, std::ostream& err) {
  auto scheme = trace::scheme_from_name(scheme_name);
  if (!scheme) {
    err << "unknown scheme '" << scheme_name << "' (expected sequential, controller or scheduler)\n";
    return kInputError;
  }
  try {
    auto t = trace::read_jsonl_file(trace_path);
    auto violations = trace::check_conformance(t, *scheme);
    if (violations.empty()) {
      out << "conformant: " << t.events.size() << " events, " << trace::scheme_name(*scheme) << " scheme\n";
      return kOk;
    }
    for (const auto& v : violations) {
      out << "violation seq=" << v.seq << " rule=" << v.rule << " expected=" << v.expected << " found=" << v.found
          << "\n";
    }
    out << violations.size() << " violation(s)\n";
    return kNonConformant;
  } catch (const trace::MalformedTrace& e) {
    err << trace_path << ": malformed trace: " << e.what() << "\n";
    return kInputError;
  }
}

int main_entry(int argc, char** argv, std::ostream& out, std::ostream& err) {
  CLI::App app{"fex: run FEX programs under sequential and controller-based execution models"};
  app.require_subcommand(1);

  RunConfig run;
  std::string backend = "seq";
  std::optional<std::string> policy_text;
  std::optional<std::string> mode_text;
  std::uint64_t seed = 0;
  std::size_t workers = 4;
  std::optional<std::string> trace_path;
  auto* run_cmd = app.add_subcommand("run", "Run a program and print its result");
  run_cmd->add_option("file", run.program_path, "FEX source file")->required();
  run_cmd->add_option("--backend", backend, "seq or abstract")->check(CLI::IsMember({"seq", "abstract"}));
  run_cmd->add_option("--policy", policy_text, "inline, eager, lazy or pool:<c>");
  run_cmd->add_option("--mode", mode_text, "simulated or parallel")->check(CLI::IsMember({"simulated", "parallel"}));
  auto* seed_opt = run_cmd->add_option("--seed", seed, "Simulated-mode scheduling seed");
  auto* workers_opt = run_cmd->add_option("--workers", workers, "Parallel-mode executors")->check(CLI::PositiveNumber);
  run_cmd->add_option("--trace", trace_path, "Write the JSONL trace here");
  run_cmd->add_option("--max-frames", run.limits.max_frames, "Call depth limit")->check(CLI::PositiveNumber);
  run_cmd->add_option("--max-steps", run.limits.max_steps, "Evaluation step limit")->check(CLI::PositiveNumber);

  std::string compare_path;
  std::optional<std::string> matrix_text;
  auto* compare_cmd = app.add_subcommand("compare", "Run a matrix of backends and compare results");
  compare_cmd->add_option("file", compare_path, "FEX source file")->required();
  compare_cmd->add_option("--matrix", matrix_text, "Comma-separated configs, e.g. seq,abstract/pool:4/parallel:4");

  std::string check_path;
  std::string scheme = "controller";
  auto* check_cmd = app.add_subcommand("check", "Check a trace file against a protocol scheme");
  check_cmd->add_option("trace", check_path, "JSONL trace file")->required();
  check_cmd->add_option("--scheme", scheme, "sequential, controller or scheduler")->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    app.exit(e, out, err);
    return e.get_exit_code() == 0 ? kOk : kInputError;
  }

  if (run_cmd->parsed()) {
    run.trace_path = trace_path;
    if (backend == "seq") {
      if (policy_text || mode_text || seed_opt->count() || workers_opt->count()) {
        err << "--policy/--mode/--seed/--workers apply only to --backend abstract\n";
        return kInputError;
      }
    } else {
      run.config.backend = Backend::Abstract;
      auto p = sched::Policy::parse(policy_text.value_or("eager"));
      if (!p) {
        err << "bad --policy '" << *policy_text << "'\n";
        return kInputError;
      }
      run.config.policy = *p;
      run.config.mode = mode_text.value_or("simulated") == "parallel" ? rt::ExecMode::parallel(workers)
                                                                       : rt::ExecMode::simulated(seed);
    }
    return cmd_run(run, out, err);
  }
  if (compare_cmd->parsed()) {
    auto matrix = matrix_text ? parse_matrix(*matrix_text) : std::optional{default_matrix()};
    if (!matrix) {
      err << "bad --matrix '" << *matrix_text << "'\n";
      return kInputError;
    }
    return cmd_compare(compare_path, *matrix, out, err);
  }
  return cmd_check(check_path, scheme, out, err);
}

}  // namespace fex::cli
