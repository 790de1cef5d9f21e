#include "filagen/error.hpp"

#include <sstream>
#include <utility>

namespace filagen {

ConfigError::ConfigError(std::string field, const std::string& message)
    : ValidationError("config field '" + field + "': " + message), field_(std::move(field)) {}

namespace {

std::string summarize(const std::vector<ManifestError::Issue>& issues) {
  std::ostringstream out;
  out << issues.size() << " manifest issue(s)";
  for (const auto& issue : issues) {
    out << "\n  [" << issue.record_id << "] " << issue.message;
  }
  return out.str();
}

}  // namespace

ManifestError::ManifestError(std::vector<Issue> issues)
    : ValidationError(summarize(issues)), issues_(std::move(issues)) {}

}  // namespace filagen
