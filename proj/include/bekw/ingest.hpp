#pragma once

// Delimited text ingestion for the CLI: column selection by name or 1-based
// index, delimiter auto-detection among comma/tab/whitespace, and an optional
// linear rescale x -> (x - c) / (d - c) for data recorded on an interval
// (c, d).  Offending rows are named in every rejection message.

#include <cctype>
#include <cstdlib>
#include <fstream>
#include <optional>
#include <sstream>
#include <string>
#include <utility>
#include <vector>

#include "bekw/dist.hpp"
#include "bekw/errors.hpp"

namespace bekw {

struct DataFileSpec {
  std::string path;
  std::string column;     // header name or 1-based index; empty = first column
  char delimiter = '\0';  // '\0' = auto-detect (',', '\t', or whitespace)
  std::optional<std::pair<double, double>> rescale;  // (c, d), requires c < d
};

namespace detail {

inline std::vector<std::string> split_fields(const std::string& line, char delim) {
  std::vector<std::string> out;
  if (delim == ' ') {  // whitespace mode: any run of blanks separates fields
    std::istringstream ss(line);
    std::string tok;
    while (ss >> tok) out.push_back(tok);
    return out;
  }
  std::string cur;
  for (char ch : line) {
    if (ch == delim) {
      out.push_back(cur);
      cur.clear();
    } else {
      cur += ch;
    }
  }
  out.push_back(cur);
  return out;
}

inline std::string trim_field(const std::string& s) {
  std::size_t b = 0, e = s.size();
  while (b < e && std::isspace(static_cast<unsigned char>(s[b]))) ++b;
  while (e > b && std::isspace(static_cast<unsigned char>(s[e - 1]))) --e;
  return s.substr(b, e - b);
}

inline bool parse_double(const std::string& s, double* out) {
  const std::string t = trim_field(s);
  if (t.empty()) return false;
  char* end = nullptr;
  const double v = std::strtod(t.c_str(), &end);
  if (end != t.c_str() + t.size()) return false;
  *out = v;
  return true;
}

}  // namespace detail

inline Sample ingest(const DataFileSpec& spec) {
  std::ifstream in(spec.path);
  if (!in) throw input_error("ingest: cannot open '" + spec.path + "'");
  if (spec.rescale && !(spec.rescale->first < spec.rescale->second))
    throw input_error("ingest: rescale interval requires c < d");

  std::vector<std::pair<long, std::string>> lines;  // (1-based row, text)
  {
    std::string raw;
    long row = 0;
    while (std::getline(in, raw)) {
      ++row;
      if (!raw.empty() && raw.back() == '\r') raw.pop_back();
      if (detail::trim_field(raw).empty()) continue;
      lines.emplace_back(row, raw);
    }
  }
  if (lines.empty()) throw input_error("ingest: '" + spec.path + "' has no data");

  char delim = spec.delimiter;
  if (delim == '\0') {
    const std::string& probe = lines.front().second;
    delim = probe.find(',') != std::string::npos   ? ','
            : probe.find('\t') != std::string::npos ? '\t'
                                                     : ' ';
  }

  // Column resolution.  A header row is one whose fields are not all
  // numeric; it is required when the column is addressed by name.
  std::size_t col = 0;
  bool by_name = false;
  if (!spec.column.empty()) {
    char* end = nullptr;
    const long idx = std::strtol(spec.column.c_str(), &end, 10);
    if (end == spec.column.c_str() + spec.column.size() && idx >= 1)
      col = static_cast<std::size_t>(idx - 1);
    else
      by_name = true;
  }
  std::size_t first_data = 0;
  {
    const std::vector<std::string> head =
        detail::split_fields(lines.front().second, delim);
    bool all_numeric = true;
    double ignored;
    for (const std::string& f : head)
      all_numeric = all_numeric && detail::parse_double(f, &ignored);
    if (!all_numeric) {
      first_data = 1;
      if (by_name) {
        bool found = false;
        for (std::size_t i = 0; i < head.size(); ++i)
          if (detail::trim_field(head[i]) == spec.column) {
            col = i;
            found = true;
            break;
          }
        if (!found)
          throw input_error("ingest: column '" + spec.column + "' not found in header");
      }
    } else if (by_name) {
      throw input_error("ingest: column '" + spec.column +
                        "' requested but the file has no header row");
    }
  }
  if (first_data >= lines.size())
    throw input_error("ingest: '" + spec.path + "' has a header but no data rows");

  Sample s;
  s.values.reserve(lines.size() - first_data);
  std::string offenders;
  int offender_count = 0;
  for (std::size_t i = first_data; i < lines.size(); ++i) {
    const long row = lines[i].first;
    const std::vector<std::string> fields = detail::split_fields(lines[i].second, delim);
    if (col >= fields.size())
      throw input_error("ingest: row " + std::to_string(row) + " has no column " +
                        std::to_string(col + 1));
    double v;
    if (!detail::parse_double(fields[col], &v))
      throw input_error("ingest: row " + std::to_string(row) + " value '" +
                        detail::trim_field(fields[col]) + "' is not numeric");
    if (spec.rescale)
      v = (v - spec.rescale->first) / (spec.rescale->second - spec.rescale->first);
    if (!(v > 0.0 && v < 1.0)) {
      if (offender_count < 5)
        offenders += (offender_count ? ", " : "") + std::to_string(row);
      ++offender_count;
    }
    s.values.push_back(v);
  }
  if (offender_count > 0)
    throw input_error(
        "ingest: " + std::to_string(offender_count) + " value(s) outside (0,1)" +
        (spec.rescale ? " after rescale" : "") + " at row(s) " + offenders +
        (offender_count > 5 ? ", ..." : ""));
  return s;
}

}  // namespace bekw
