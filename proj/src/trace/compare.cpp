#include <map>

#include "fex/trace.hpp"

namespace fex::trace {

EqualityReport compare_outcomes(const std::vector<std::pair<std::string, Outcome>>& outcomes) {
  EqualityReport report;
  std::map<std::string, std::size_t> votes;
  std::vector<std::string> first_seen;
  for (const auto& [label, outcome] : outcomes) {
    auto key = outcome.describe();
    if (votes[key]++ == 0) first_seen.push_back(key);
  }
  std::string reference;
  std::size_t best = 0;
  for (const auto& key : first_seen) {
    if (votes[key] > best) {
      best = votes[key];
      reference = key;
    }
  }
  report.reference = reference;
  for (const auto& [label, outcome] : outcomes) {
    ComparisonRow row{label, outcome.describe(), outcome.steps, outcome.describe() == reference};
    if (!row.agrees) {
      report.equal = false;
      report.dissenting.push_back(label);
    }
    report.rows.push_back(std::move(row));
  }
  return report;
}

std::string EqualityReport::summary() const {
  if (equal) return "equal (" + reference + ")";
  std::string out = "MISMATCH: reference " + reference + "; dissenting:";
  for (const auto& label : dissenting) out += " " + label;
  return out;
}

}  // namespace fex::trace
