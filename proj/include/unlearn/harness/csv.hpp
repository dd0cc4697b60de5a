#pragma once

#include <charconv>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <optional>
#include <sstream>
#include <string>
#include <string_view>
#include <system_error>
#include <vector>

#include <unistd.h>

#include "unlearn/errors.hpp"

namespace unlearn::harness {

inline std::string_view trim(std::string_view s) {
  const auto first = s.find_first_not_of(" \t\r\n");
  if (first == std::string_view::npos) return {};
  const auto last = s.find_last_not_of(" \t\r\n");
  return s.substr(first, last - first + 1);
}

/// Splits on `sep`; surrounding whitespace and double quotes are stripped.
/// Quoted fields containing the separator are not supported.
inline std::vector<std::string> split_fields(std::string_view line, char sep = ',') {
  std::vector<std::string> out;
  std::size_t start = 0;
  while (true) {
    const std::size_t pos = line.find(sep, start);
    std::string_view cell = trim(line.substr(start, pos == std::string_view::npos ? line.npos : pos - start));
    if (cell.size() >= 2 && cell.front() == '"' && cell.back() == '"') {
      cell = cell.substr(1, cell.size() - 2);
    }
    out.emplace_back(cell);
    if (pos == std::string_view::npos) break;
    start = pos + 1;
  }
  return out;
}

inline std::vector<std::string> split_whitespace(std::string_view line) {
  std::vector<std::string> out;
  std::istringstream is{std::string(line)};
  std::string tok;
  while (is >> tok) out.push_back(tok);
  return out;
}

inline std::optional<double> parse_double(std::string_view s) {
  s = trim(s);
  if (s.empty()) return std::nullopt;
  if (s.front() == '+') s.remove_prefix(1);
  double value = 0.0;
  const auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), value);
  if (ec != std::errc{} || ptr != s.data() + s.size()) return std::nullopt;
  return value;
}

/// Shortest text that parses back to the same double.
inline std::string format_double(double v) {
  if (std::isnan(v)) return "nan";
  if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
  char buf[64];
  const auto [ptr, ec] = std::to_chars(buf, buf + sizeof buf, v);
  if (ec != std::errc{}) throw Error("number formatting failed");
  return std::string(buf, ptr);
}

/// Numeric table with an optional header row.
struct Table {
  std::vector<std::string> header;  // empty when the file has none
  std::vector<std::vector<double>> rows;
};

/// Reads a comma-separated numeric table. A first row with any non-numeric
/// cell is taken as the header. Blank lines and lines starting with '#' are
/// skipped.
inline Table read_table(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot open " + path.string());
  Table table;
  std::string line;
  std::size_t line_no = 0;
  std::size_t width = 0;
  bool first = true;
  while (std::getline(in, line)) {
    ++line_no;
    const std::string_view t = trim(line);
    if (t.empty() || t.front() == '#') continue;
    std::vector<std::string> cells = split_fields(t);
    if (first) {
      first = false;
      bool numeric = true;
      for (const auto& c : cells) numeric = numeric && parse_double(c).has_value();
      width = cells.size();
      if (!numeric) {
        table.header = std::move(cells);
        continue;
      }
    }
    if (cells.size() != width) {
      throw DataError(path.string() + ":" + std::to_string(line_no) + ": ragged row (" +
                      std::to_string(cells.size()) + " fields, expected " +
                      std::to_string(width) + ")");
    }
    std::vector<double> row;
    row.reserve(cells.size());
    for (std::size_t j = 0; j < cells.size(); ++j) {
      const auto v = parse_double(cells[j]);
      if (!v) {
        throw DataError(path.string() + ":" + std::to_string(line_no) + ": non-numeric cell '" +
                        cells[j] + "' in column " + std::to_string(j + 1));
      }
      row.push_back(*v);
    }
    table.rows.push_back(std::move(row));
  }
  return table;
}

/// Writes through a temporary sibling file and renames it into place, so a
/// reader never observes a half-written file.
inline void write_atomic(const std::filesystem::path& path, const std::string& content) {
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  std::filesystem::path tmp = path;
  tmp += ".tmp." + std::to_string(::getpid());
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw DataError("cannot write " + tmp.string());
    out << content;
    out.flush();
    if (!out) throw DataError("write failed for " + tmp.string());
  }
  std::error_code ec;
  std::filesystem::rename(tmp, path, ec);
  if (ec) {
    std::filesystem::remove(tmp);
    throw DataError("cannot move " + tmp.string() + " to " + path.string() + ": " + ec.message());
  }
}

/// Quotes a text cell when it contains a separator, quote or newline.
inline std::string csv_escape(const std::string& s) {
  if (s.find_first_of(",\"\n\r") == std::string::npos) return s;
  std::string out = "\"";
  for (char c : s) {
    if (c == '"') out += '"';
    out += c;
  }
  out += '"';
  return out;
}

}  // namespace unlearn::harness
