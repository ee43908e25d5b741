#pragma once

#include <nlohmann/json.hpp>
#include <optional>
#include <string>
#include <vector>

#include "ipoc/continuation.hpp"
#include "ipoc/diagnostics.hpp"
#include "ipoc/problems.hpp"

namespace ipoc {

/// A report file is missing a field or has one of the wrong type.
class ReportFormatError : public Error {
 public:
  ReportFormatError(const std::string& field, const std::string& what)
      : Error("report field '" + field + "': " + what), field_(field) {}
  const std::string& field() const noexcept { return field_; }

 private:
  std::string field_;
};

/// Everything a solve run writes to its JSON report. The settings are the
/// effective ones after flag and bundle precedence.
struct SolveReport {
  std::string problem;
  Method method = Method::Primal;
  ContinuationConfig config;
  SolverOptions options;
  bool success = false;
  std::string error;  ///< empty on success
  RunReport run;
  std::optional<KktReport> kkt;  ///< at the last converged barrier value
  std::optional<ReferenceRow> reference;
  std::vector<std::string> corrections;
};

/// Writes `content` to a temporary file next to `path` and renames it over
/// `path`. Throws Error on I/O failure.
void write_file_atomic(const std::string& path, const std::string& content);

/// Shortest decimal form that reads back to the same double.
std::string format_double(double value);

/// Header `t,x1..xn,p1..pn,u1..um,lg1..,lc1..` then one row per node with 17
/// significant digits.
std::string trajectory_csv(const OcpSpec& spec, const DaeSolution& solution,
                           const Multipliers& multipliers);

nlohmann::json report_to_json(const SolveReport& report);

/// Inverse of report_to_json. Throws ReportFormatError naming the first
/// missing or mistyped field.
SolveReport report_from_json(const nlohmann::json& json);

/// Parses the text of a report file; syntax errors become ReportFormatError.
SolveReport parse_report(const std::string& text);

/// `Method | decay ratio α | number of iterations | final length of time
/// array | exec. time`, one row per report, in input order.
std::string render_table(const std::vector<SolveReport>& reports);

Method parse_method(const std::string& name);

}  // namespace ipoc
