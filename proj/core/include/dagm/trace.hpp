#pragma once

#include <filesystem>
#include <iosfwd>
#include <limits>
#include <optional>
#include <string>
#include <utility>
#include <vector>

namespace dagm {

inline constexpr double kNull = std::numeric_limits<double>::quiet_NaN();

/// One iteration of a discrete run. NaN fields and empty optionals are
/// written as empty CSV cells.
struct TraceRecord {
  long k = 0;
  double f_gap_plus = kNull;  // F(X_k^+) - F*
  double f_gap = kNull;       // F(X_k) - F*
  double grad_norm = kNull;   // ||grad F(X_k)||
  double laplacian_norm = kNull;  // ||L~ X_k||
  double step = kNull;        // s_k
  double lyapunov = kNull;    // V_k (V'_0 on the k = 0 row)
  std::string step_case;      // controller branch label
  double w = kNull;
  double r = kNull;
  std::optional<bool> monotonicity_ok;
  std::optional<bool> fallback;
};

/// Per-iteration metrics of one algorithm run plus self-describing metadata.
struct RunTrace {
  std::string algorithm;
  std::string problem;
  std::vector<TraceRecord> records;
  double f_star = kNull;
  /// Positive reference step used by the rate bound and V'_0 (Dist-AGM only).
  double s_ref = kNull;
  double initial_distance_sq = kNull;  // ||X_0 - X*||^2
  double h = kNull;
  double beta = kNull;
  bool diverged = false;
  long divergence_index = -1;
  /// grad F(X*) was replaced by zero in the controller.
  bool approximate_oracle = false;
  /// Extra key/value pairs written as header comments (config hash, seed, ...).
  std::vector<std::pair<std::string, std::string>> metadata;

  const TraceRecord& back() const { return records.back(); }
};

/// Column order of trace CSV files.
const std::vector<std::string>& trace_columns();

void write_trace_csv(std::ostream& out, const RunTrace& trace);
void write_trace_csv(const std::filesystem::path& path, const RunTrace& trace);

/// Formats a double with the shortest round-trip representation; NaN -> "".
std::string format_number(double value);

/// Minimal reader for the comma-separated files this library writes:
/// '#' lines are metadata comments ("# key: value"), the first other line is the header.
struct CsvTable {
  std::vector<std::pair<std::string, std::string>> metadata;
  std::vector<std::string> header;
  std::vector<std::vector<std::string>> rows;

  /// Index of a column, or -1.
  int column(const std::string& name) const;
  /// Numeric column; empty cells become NaN.
  std::vector<double> numeric(const std::string& name) const;
  std::optional<std::string> meta(const std::string& key) const;
};

CsvTable read_csv(std::istream& in);
CsvTable read_csv(const std::filesystem::path& path);

}  // namespace dagm
