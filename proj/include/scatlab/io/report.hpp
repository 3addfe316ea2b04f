#pragma once

#include <algorithm>
#include <cmath>
#include <charconv>
#include <cstdio>
#include <deque>
#include <filesystem>
#include <fstream>
#include <numbers>
#include <sstream>
#include <stdexcept>
#include <string>
#include <variant>
#include <vector>

#include "json.hpp"

#include "scatlab/core/errors.hpp"
#include "scatlab/core/version.hpp"

namespace scatlab {

using Cell = std::variant<std::string, double, long>;

inline std::string format_double(double x) {
  if (std::isnan(x)) return "nan";
  if (std::isinf(x)) return x > 0.0 ? "inf" : "-inf";
  // Shortest text that reads back to the same double.
  char buf[40];
  const auto res = std::to_chars(buf, buf + sizeof buf, x);
  return std::string(buf, res.ptr);
}

inline std::string csv_quote(const std::string& s) {
  if (s.find_first_of(",\"\n") == std::string::npos) return s;
  std::string q = "\"";
  for (char ch : s) q += ch == '"' ? std::string("\"\"") : std::string(1, ch);
  return q + "\"";
}

inline std::string format_cell(const Cell& c) {
  if (const auto* s = std::get_if<std::string>(&c)) return csv_quote(*s);
  if (const auto* d = std::get_if<double>(&c)) return format_double(*d);
  return std::to_string(std::get<long>(c));
}

struct Table {
  std::string name;
  std::vector<std::string> columns;
  std::vector<std::vector<Cell>> rows;

  void add(std::vector<Cell> row) {
    if (row.size() != columns.size()) throw std::logic_error("row width does not match table " + name);
    rows.push_back(std::move(row));
  }
};

/// A command's output: ordered metadata plus tables. Everything in here is a pure function
/// of the resolved config, so two runs with equal config bytes produce equal reports.
struct Report {
  std::string command;
  std::vector<std::pair<std::string, std::string>> meta;
  /// Deque: references returned by table() stay valid as more tables are added.
  std::deque<Table> tables;

  Table& table(const std::string& name, std::vector<std::string> columns) {
    tables.push_back(Table{name, std::move(columns), {}});
    return tables.back();
  }
  const Table* find(const std::string& name) const {
    for (const auto& t : tables)
      if (t.name == name) return &t;
    return nullptr;
  }
};

/// CSV layout: a "# scatlab report" line with the schema version, "# key: value" metadata,
/// then per table a "# table: NAME" line, the header row, the data rows and a blank line.
inline std::string to_csv(const Report& r) {
  std::ostringstream out;
  out << "# scatlab report schema " << kReportSchemaVersion << "\n";
  out << "# command: " << r.command << "\n";
  for (const auto& [k, v] : r.meta) out << "# " << k << ": " << v << "\n";
  for (const auto& t : r.tables) {
    out << "\n# table: " << t.name << "\n";
    for (std::size_t i = 0; i < t.columns.size(); ++i) out << (i ? "," : "") << t.columns[i];
    out << "\n";
    for (const auto& row : t.rows) {
      for (std::size_t i = 0; i < row.size(); ++i) out << (i ? "," : "") << format_cell(row[i]);
      out << "\n";
    }
  }
  return out.str();
}

inline nlohmann::ordered_json to_json(const Report& r) {
  nlohmann::ordered_json j;
  j["schema_version"] = kReportSchemaVersion;
  j["command"] = r.command;
  auto& meta = j["meta"] = nlohmann::ordered_json::object();
  for (const auto& [k, v] : r.meta) meta[k] = v;
  auto& tables = j["tables"] = nlohmann::ordered_json::array();
  for (const auto& t : r.tables) {
    nlohmann::ordered_json tj;
    tj["name"] = t.name;
    tj["columns"] = t.columns;
    auto& rows = tj["rows"] = nlohmann::ordered_json::array();
    for (const auto& row : t.rows) {
      auto jr = nlohmann::ordered_json::array();
      for (const auto& c : row) {
        if (const auto* d = std::get_if<double>(&c)) {
          // JSON has no NaN or infinity; carry those as strings.
          if (std::isfinite(*d)) jr.push_back(*d);
          else jr.push_back(format_double(*d));
        } else if (const auto* l = std::get_if<long>(&c)) {
          jr.push_back(*l);
        } else {
          jr.push_back(std::get<std::string>(c));
        }
      }
      rows.push_back(std::move(jr));
    }
    tables.push_back(std::move(tj));
  }
  return j;
}

/// Counts of phases in 64 equal bins over (−π, π]; bin i is (−π + iw, −π + (i+1)w].
inline std::vector<long> phase_histogram(const std::vector<double>& phases, int bins = 64) {
  std::vector<long> c(bins, 0);
  const double w = 2.0 * std::numbers::pi / bins;
  for (double b : phases) {
    int i = static_cast<int>(std::ceil((b + std::numbers::pi) / w)) - 1;
    c[std::clamp(i, 0, bins - 1)] += 1;
  }
  return c;
}

inline std::string histogram_svg(const std::vector<double>& phases, const std::string& title) {
  constexpr int bins = 64, bar = 14, plot_h = 300, left = 50, top = 40, bottom = 60;
  const auto c = phase_histogram(phases, bins);
  long peak = 1;
  for (long v : c) peak = std::max(peak, v);
  const int width = left + bins * bar + 20, height = top + plot_h + bottom;
  std::ostringstream s;
  s << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << width << "\" height=\"" << height
    << "\" font-family=\"monospace\" font-size=\"9\">\n";
  s << "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";
  s << "<text x=\"" << left << "\" y=\"20\" font-size=\"13\">" << title << "</text>\n";
  s << "<line x1=\"" << left << "\" y1=\"" << top + plot_h << "\" x2=\"" << left + bins * bar << "\" y2=\"" << top + plot_h
    << "\" stroke=\"black\"/>\n";
  for (int i = 0; i < bins; ++i) {
    const int hgt = static_cast<int>(std::lround(static_cast<double>(c[i]) / peak * plot_h));
    const int x = left + i * bar;
    s << "<rect x=\"" << x + 1 << "\" y=\"" << top + plot_h - hgt << "\" width=\"" << bar - 2 << "\" height=\"" << hgt
      << "\" fill=\"steelblue\"/>\n";
    if (c[i] > 0)
      s << "<text x=\"" << x + bar / 2 << "\" y=\"" << top + plot_h - hgt - 3 << "\" text-anchor=\"middle\">" << c[i]
        << "</text>\n";
  }
  const char* ticks[] = {"-pi", "-pi/2", "0", "pi/2", "pi"};
  for (int k = 0; k <= 4; ++k) {
    const int x = left + k * bins * bar / 4;
    s << "<line x1=\"" << x << "\" y1=\"" << top + plot_h << "\" x2=\"" << x << "\" y2=\"" << top + plot_h + 5
      << "\" stroke=\"black\"/>\n";
    s << "<text x=\"" << x << "\" y=\"" << top + plot_h + 18 << "\" text-anchor=\"middle\">" << ticks[k] << "</text>\n";
  }
  s << "<text x=\"" << left + bins * bar / 2 << "\" y=\"" << height - 15
    << "\" text-anchor=\"middle\" font-size=\"11\">eigenphase (64 bins over (-pi, pi]), total " << phases.size()
    << "</text>\n";
  s << "</svg>\n";
  return s.str();
}

inline void write_text(const std::filesystem::path& path, const std::string& text) {
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw config_error("OutputWriteFailure", "cannot write " + path.string());
  out << text;
  if (!out) throw config_error("OutputWriteFailure", "short write to " + path.string());
}

}  // namespace scatlab
