#pragma once

#include <filesystem>
#include <string>
#include <vector>

#include "json.hpp"

#include "socratic/error.hpp"
#include "socratic/socratic_engine.hpp"

namespace socratic {

enum class TraceErrorKind { SchemaMismatch, Malformed, Io };

class TraceError : public Error {
 public:
  TraceError(TraceErrorKind kind, const std::string& detail);
  TraceErrorKind kind() const { return kind_; }

 private:
  TraceErrorKind kind_;
};

nlohmann::json trace_to_json(const EpisodeTrace& t);
EpisodeTrace trace_from_json(const nlohmann::json& j);

/// One compact JSON object, no trailing newline. Keys are sorted, so equal
/// traces give equal bytes.
std::string trace_to_line(const EpisodeTrace& t);

/// Blank lines are ignored. Errors name the 1-based line number.
std::vector<EpisodeTrace> read_traces(const std::filesystem::path& path);
void write_traces(const std::filesystem::path& path, const std::vector<EpisodeTrace>& traces);

}  // namespace socratic
