#pragma once

#include <algorithm>
#include <cctype>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <utility>
#include <istream>
#include <ostream>
#include <sstream>
#include <string>
#include <vector>

#include "gmi/subject.hpp"

namespace gmi {

// Column names for ingestion. Covariate columns are auto-detected by prefix:
// z1..zq continuous, v1.. categorical. Matching is case-insensitive.
struct ColumnMap {
  std::string t0 = "t0";
  std::string time1 = "time1";
  std::string status1 = "status1";
  std::string z_prefix = "z";
  std::string v_prefix = "v";
};

struct Dataset {
  std::vector<SubjectRecord> records;
  std::string source;
  std::vector<std::string> z_columns;
  std::vector<std::string> v_columns;
};

namespace detail {

inline std::string trim_field(const std::string& s) {
  const auto a = s.find_first_not_of(" \t\r\n");
  if (a == std::string::npos) return "";
  const auto b = s.find_last_not_of(" \t\r\n");
  return s.substr(a, b - a + 1);
}

inline std::vector<std::string> split_fields(const std::string& line) {
  std::vector<std::string> out;
  std::string field;
  std::istringstream in(line);
  while (std::getline(in, field, ',')) out.push_back(trim_field(field));
  if (!line.empty() && line.back() == ',') out.push_back("");
  return out;
}

inline bool iequals(const std::string& a, const std::string& b) {
  if (a.size() != b.size()) return false;
  for (std::size_t i = 0; i < a.size(); ++i)
    if (std::tolower(static_cast<unsigned char>(a[i])) !=
        std::tolower(static_cast<unsigned char>(b[i])))
      return false;
  return true;
}

inline bool istarts_with(const std::string& s, const std::string& prefix) {
  if (s.size() < prefix.size()) return false;
  return iequals(s.substr(0, prefix.size()), prefix);
}

inline bool parse_double_field(const std::string& s, double& out) {
  if (s.empty()) return false;
  char* end = nullptr;
  out = std::strtod(s.c_str(), &end);
  return end == s.c_str() + s.size();
}

inline bool parse_int_field(const std::string& s, long& out) {
  if (s.empty()) return false;
  char* end = nullptr;
  out = std::strtol(s.c_str(), &end, 10);
  return end == s.c_str() + s.size();
}

// covariate columns: prefix followed by digits only (z1, z2, ...)
inline bool covariate_column(const std::string& name, const std::string& prefix, int& index) {
  if (!istarts_with(name, prefix) || name.size() == prefix.size()) return false;
  long idx = 0;
  if (!parse_int_field(name.substr(prefix.size()), idx)) return false;
  index = static_cast<int>(idx);
  return true;
}

}  // namespace detail

inline Dataset parse_csv(std::istream& in, const ColumnMap& map = {},
                         const std::string& source = "<stream>") {
  Dataset ds;
  ds.source = source;
  std::string line;
  if (!std::getline(in, line)) throw data_error(source + ": empty file");
  const std::vector<std::string> header = detail::split_fields(line);
  int col_t0 = -1, col_time1 = -1, col_status1 = -1;
  std::vector<std::pair<int, int>> z_cols, v_cols;  // (suffix index, column)
  for (int c = 0; c < static_cast<int>(header.size()); ++c) {
    const std::string& name = header[c];
    int idx = 0;
    if (detail::iequals(name, map.t0))
      col_t0 = c;
    else if (detail::iequals(name, map.time1))
      col_time1 = c;
    else if (detail::iequals(name, map.status1))
      col_status1 = c;
    else if (detail::covariate_column(name, map.z_prefix, idx))
      z_cols.emplace_back(idx, c);
    else if (detail::covariate_column(name, map.v_prefix, idx))
      v_cols.emplace_back(idx, c);
  }
  if (col_t0 < 0) throw data_error(source + ": missing column '" + map.t0 + "'");
  if (col_time1 < 0) throw data_error(source + ": missing column '" + map.time1 + "'");
  if (col_status1 < 0) throw data_error(source + ": missing column '" + map.status1 + "'");
  std::sort(z_cols.begin(), z_cols.end());
  std::sort(v_cols.begin(), v_cols.end());
  for (const auto& [idx, c] : z_cols) ds.z_columns.push_back(header[c]);
  for (const auto& [idx, c] : v_cols) ds.v_columns.push_back(header[c]);

  int line_no = 1;
  while (std::getline(in, line)) {
    ++line_no;
    if (detail::trim_field(line).empty()) continue;
    const std::vector<std::string> fields = detail::split_fields(line);
    const std::string where = source + " line " + std::to_string(line_no) + ": ";
    if (fields.size() != header.size())
      throw data_error(where + "expected " + std::to_string(header.size()) + " fields, got " +
                       std::to_string(fields.size()));
    SubjectRecord rec;
    if (!detail::parse_double_field(fields[col_t0], rec.t0) || !(rec.t0 > 0.0))
      throw data_error(where + "t0 must be a positive number, got '" + fields[col_t0] + "'");
    if (!detail::parse_double_field(fields[col_time1], rec.y1) || !(rec.y1 > 0.0))
      throw data_error(where + "time1 must be a positive number, got '" + fields[col_time1] + "'");
    long status = -1;
    if (!detail::parse_int_field(fields[col_status1], status) || (status != 0 && status != 1))
      throw data_error(where + "status1 must be 0 or 1, got '" + fields[col_status1] + "'");
    rec.delta1 = static_cast<int>(status);
    for (const auto& [idx, c] : z_cols) {
      double zv = 0.0;
      if (!detail::parse_double_field(fields[c], zv))
        throw data_error(where + "bad value in covariate column '" + header[c] + "'");
      rec.z.push_back(zv);
    }
    for (const auto& [idx, c] : v_cols) {
      long vv = 0;
      if (!detail::parse_int_field(fields[c], vv))
        throw data_error(where + "bad code in covariate column '" + header[c] + "'");
      rec.v.push_back(static_cast<int>(vv));
    }
    ds.records.push_back(std::move(rec));
  }
  if (ds.records.empty()) throw data_error(source + ": no data rows");
  return ds;
}

inline Dataset parse_csv(const std::string& path, const ColumnMap& map = {}) {
  std::ifstream in(path);
  if (!in) throw data_error(path + ": cannot open file");
  return parse_csv(in, map, path);
}

// Full-precision export; parse(write(ds)) reproduces the records exactly.
inline void write_csv(std::ostream& out, const Dataset& ds) {
  out << "t0,time1,status1";
  for (std::size_t k = 0; k < ds.records.front().z.size(); ++k) out << ",z" << (k + 1);
  for (std::size_t k = 0; k < ds.records.front().v.size(); ++k) out << ",v" << (k + 1);
  out << "\n";
  char buf[64];
  for (const auto& rec : ds.records) {
    std::snprintf(buf, sizeof(buf), "%.17g", rec.t0);
    out << buf;
    std::snprintf(buf, sizeof(buf), ",%.17g", rec.y1);
    out << buf;
    out << "," << rec.delta1;
    for (const double zv : rec.z) {
      std::snprintf(buf, sizeof(buf), ",%.17g", zv);
      out << buf;
    }
    for (const int vv : rec.v) out << "," << vv;
    out << "\n";
  }
}

// Administrative follow-up restriction: any follow-up beyond `cap` months is
// cut to the cap and marked censored. t0 is never modified. Idempotent at the
// same cap.
inline Dataset restrict_followup(Dataset ds, double cap) {
  if (!(cap > 0.0)) throw std::invalid_argument("restrict_followup: cap must be positive");
  for (auto& rec : ds.records) {
    if (rec.y1 > cap) {
      rec.y1 = cap;
      rec.delta1 = 0;
    }
  }
  return ds;
}

inline std::vector<SubjectRecord> restrict_followup(std::vector<SubjectRecord> records,
                                                    double cap) {
  if (!(cap > 0.0)) throw std::invalid_argument("restrict_followup: cap must be positive");
  for (auto& rec : records) {
    if (rec.y1 > cap) {
      rec.y1 = cap;
      rec.delta1 = 0;
    }
  }
  return records;
}

}  // namespace gmi
