#include "dagm/trace.hpp"

#include <cmath>
#include <fstream>
#include <istream>
#include <ostream>
#include <sstream>

#include <fmt/format.h>

#include "dagm/error.hpp"

namespace dagm {

namespace {

std::string format_flag(const std::optional<bool>& flag) {
  if (!flag) return {};
  return *flag ? "1" : "0";
}

std::string trim(const std::string& s) {
  const auto first = s.find_first_not_of(" \t\r");
  if (first == std::string::npos) return {};
  const auto last = s.find_last_not_of(" \t\r");
  return s.substr(first, last - first + 1);
}

std::vector<std::string> split(const std::string& line) {
  std::vector<std::string> cells;
  std::string cell;
  std::istringstream in(line);
  while (std::getline(in, cell, ',')) cells.push_back(trim(cell));
  if (!line.empty() && line.back() == ',') cells.emplace_back();
  return cells;
}

}  // namespace

std::string format_number(double value) {
  if (std::isnan(value)) return {};
  return fmt::format("{}", value);
}

const std::vector<std::string>& trace_columns() {
  static const std::vector<std::string> columns{"k",      "F_gap_plus", "F_gap", "grad_norm",       "laplacian_norm",
                                                "s_k",    "V_k",        "case",  "w",               "r",
                                                "monotonicity_ok",      "fallback_flag"};
  return columns;
}

void write_trace_csv(std::ostream& out, const RunTrace& trace) {
  out << "# algorithm: " << trace.algorithm << '\n';
  out << "# problem: " << trace.problem << '\n';
  out << "# f_star: " << format_number(trace.f_star) << '\n';
  if (!std::isnan(trace.s_ref)) out << "# s_ref: " << format_number(trace.s_ref) << '\n';
  if (!std::isnan(trace.initial_distance_sq)) out << "# initial_distance_sq: " << format_number(trace.initial_distance_sq) << '\n';
  if (!std::isnan(trace.h)) out << "# h: " << format_number(trace.h) << '\n';
  if (!std::isnan(trace.beta)) out << "# beta: " << format_number(trace.beta) << '\n';
  out << "# diverged: " << (trace.diverged ? 1 : 0) << '\n';
  if (trace.diverged) out << "# divergence_index: " << trace.divergence_index << '\n';
  if (trace.approximate_oracle) out << "# oracle: practical (grad F(X*) taken as 0)\n";
  for (const auto& [key, value] : trace.metadata) out << "# " << key << ": " << value << '\n';

  const auto& cols = trace_columns();
  for (std::size_t c = 0; c < cols.size(); ++c) out << (c ? "," : "") << cols[c];
  out << '\n';
  for (const auto& r : trace.records) {
    out << r.k << ',' << format_number(r.f_gap_plus) << ',' << format_number(r.f_gap) << ','
        << format_number(r.grad_norm) << ',' << format_number(r.laplacian_norm) << ',' << format_number(r.step)
        << ',' << format_number(r.lyapunov) << ',' << r.step_case << ',' << format_number(r.w) << ','
        << format_number(r.r) << ',' << format_flag(r.monotonicity_ok) << ',' << format_flag(r.fallback) << '\n';
  }
}

void write_trace_csv(const std::filesystem::path& path, const RunTrace& trace) {
  std::ofstream out(path);
  if (!out) throw Error("cannot write " + path.string());
  write_trace_csv(out, trace);
}

int CsvTable::column(const std::string& name) const {
  for (std::size_t c = 0; c < header.size(); ++c)
    if (header[c] == name) return static_cast<int>(c);
  return -1;
}

std::vector<double> CsvTable::numeric(const std::string& name) const {
  const int c = column(name);
  if (c < 0) throw InvalidArgument("no column named '" + name + "'");
  std::vector<double> values;
  values.reserve(rows.size());
  for (const auto& row : rows) {
    const auto idx = static_cast<std::size_t>(c);
    if (idx >= row.size() || row[idx].empty()) {
      values.push_back(kNull);
    } else {
      values.push_back(std::stod(row[idx]));
    }
  }
  return values;
}

std::optional<std::string> CsvTable::meta(const std::string& key) const {
  for (const auto& [k, v] : metadata)
    if (k == key) return v;
  return std::nullopt;
}

CsvTable read_csv(std::istream& in) {
  CsvTable table;
  std::string line;
  bool have_header = false;
  while (std::getline(in, line)) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    if (line.front() == '#') {
      const std::string body = trim(line.substr(1));
      const auto colon = body.find(':');
      if (colon == std::string::npos) {
        table.metadata.emplace_back(body, "");
      } else {
        table.metadata.emplace_back(trim(body.substr(0, colon)), trim(body.substr(colon + 1)));
      }
      continue;
    }
    if (!have_header) {
      table.header = split(line);
      have_header = true;
    } else {
      table.rows.push_back(split(line));
    }
  }
  if (!have_header) throw InvalidArgument("CSV has no header line");
  return table;
}

CsvTable read_csv(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw Error("cannot open " + path.string());
  return read_csv(in);
}

}  // namespace dagm
