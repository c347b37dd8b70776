#include <fstream>
#include <sstream>

#include <json.hpp>

#include "fex/trace.hpp"

namespace fex::trace {

namespace {

using nlohmann::ordered_json;

ordered_json event_json(const TraceEvent& e) {
  ordered_json j;
  j["seq"] = e.seq;
  j["actor"] = e.actor;
  j["event"] = kind_name(e.kind);
  j["instance"] = e.instance ? ordered_json(e.instance->str()) : ordered_json(nullptr);
  j["fn"] = e.fn ? ordered_json(*e.fn) : ordered_json(nullptr);
  ordered_json detail = ordered_json::object();
  for (const auto& [k, v] : e.detail.items()) detail[k] = v;
  j["detail"] = std::move(detail);
  return j;
}

ordered_json value_json(const Value& v) {
  if (v.is_int()) return v.as_int();
  if (v.is_bool()) return v.as_bool();
  return v.as_handle().str();
}

std::optional<Value> value_from_json(const ordered_json& j) {
  if (j.is_null()) return std::nullopt;
  if (j.is_boolean()) return Value::boolean(j.get<bool>());
  if (j.is_number_integer()) return Value::integer(j.get<std::int64_t>());
  if (j.is_string()) {
    if (auto id = InstanceId::parse(j.get<std::string>())) return Value::handle(*id);
  }
  throw MalformedTrace("RUN_END result is not a value: " + j.dump());
}

std::optional<std::string> optional_string(const ordered_json& j, const char* field, std::size_t line) {
  if (!j.contains(field) || j[field].is_null()) return std::nullopt;
  if (!j[field].is_string()) {
    throw MalformedTrace("line " + std::to_string(line) + ": field '" + field + "' must be a string or null");
  }
  return j[field].get<std::string>();
}

}  // namespace

void write_jsonl(const Trace& trace, std::ostream& out) {
  for (const auto& e : trace.events) out << event_json(e).dump() << '\n';
  if (trace.summary) {
    ordered_json end;
    end["seq"] = trace.events.empty() ? 1 : trace.events.back().seq + 1;
    end["actor"] = "run";
    end["event"] = "RUN_END";
    end["detail"]["result"] = trace.summary->result ? value_json(*trace.summary->result) : ordered_json(nullptr);
    end["detail"]["error"] = trace.summary->error ? ordered_json(*trace.summary->error) : ordered_json(nullptr);
    out << end.dump() << '\n';
  }
}

std::string to_jsonl(const Trace& trace) {
  std::ostringstream out;
  write_jsonl(trace, out);
  return out.str();
}

void write_jsonl_file(const Trace& trace, const std::string& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot open trace file for writing: " + path);
  write_jsonl(trace, out);
}

Trace read_jsonl(std::istream& in) {
  Trace trace;
  std::string line;
  std::size_t lineno = 0;
  std::uint64_t last_seq = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    if (trace.summary) throw MalformedTrace("line " + std::to_string(lineno) + ": event after RUN_END");
    ordered_json j;
    try {
      j = ordered_json::parse(line);
    } catch (const nlohmann::json::parse_error& err) {
      throw MalformedTrace("line " + std::to_string(lineno) + ": " + err.what());
    }
    if (!j.is_object() || !j.contains("seq") || !j["seq"].is_number_unsigned() || !j.contains("event") ||
        !j["event"].is_string() || !j.contains("actor") || !j["actor"].is_string()) {
      throw MalformedTrace("line " + std::to_string(lineno) + ": missing seq/actor/event");
    }
    auto seq = j["seq"].get<std::uint64_t>();
    if (seq <= last_seq) {
      throw MalformedTrace("line " + std::to_string(lineno) + ": seq " + std::to_string(seq) +
                           " does not increase");
    }
    last_seq = seq;
    auto name = j["event"].get<std::string>();
    if (!j.contains("detail") || !j["detail"].is_object()) {
      throw MalformedTrace("line " + std::to_string(lineno) + ": detail must be an object");
    }
    const ordered_json& detail = j["detail"];
    if (name == "RUN_END") {
      RunSummary s;
      if (detail.contains("result")) s.result = value_from_json(detail["result"]);
      if (detail.contains("error") && !detail["error"].is_null()) s.error = detail["error"].get<std::string>();
      trace.summary = std::move(s);
      continue;
    }
    auto kind = kind_from_name(name);
    if (!kind) throw MalformedTrace("line " + std::to_string(lineno) + ": unknown event kind '" + name + "'");
    TraceEvent e;
    e.seq = seq;
    e.actor = j["actor"].get<std::string>();
    e.kind = *kind;
    if (auto inst = optional_string(j, "instance", lineno)) {
      e.instance = InstanceId::parse(*inst);
      if (!e.instance) throw MalformedTrace("line " + std::to_string(lineno) + ": bad instance id '" + *inst + "'");
    }
    e.fn = optional_string(j, "fn", lineno);
    for (const auto& [k, v] : detail.items()) e.detail.set(k, v.is_string() ? v.get<std::string>() : v.dump());
    trace.events.push_back(std::move(e));
  }
  return trace;
}

Trace read_jsonl_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw MalformedTrace("cannot open trace file: " + path);
  return read_jsonl(in);
}

}  // namespace fex::trace
