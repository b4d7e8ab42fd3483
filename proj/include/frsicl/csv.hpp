#pragma once

// Minimal CSV I/O. Floats are rendered with 6 significant digits ("%.6g")
// and a '.' decimal separator regardless of the global locale.

#include <cstdio>
#include <fstream>
#include <sstream>
#include <stdexcept>
#include <string>
#include <string_view>
#include <type_traits>
#include <vector>

namespace frsicl {

class IoError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

inline std::string format_number(double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.6g", v);
  std::string s(buf);
  for (char& c : s) {
    if (c == ',') c = '.';
  }
  return s;
}

namespace detail {

inline std::string csv_field(const std::string& s) { return s; }
inline std::string csv_field(const char* s) { return s; }
inline std::string csv_field(bool b) { return b ? "1" : "0"; }
inline std::string csv_field(double v) { return format_number(v); }
template <typename T>
  requires std::is_integral_v<T>
std::string csv_field(T v) {
  return std::to_string(v);
}

}  // namespace detail

class CsvWriter {
 public:
  CsvWriter(const std::string& path, std::string_view header) : path_(path), out_(path, std::ios::trunc) {
    if (!out_) throw IoError("cannot open " + path + " for writing");
    out_ << header << '\n';
  }

  template <typename... Fields>
  void row(const Fields&... fields) {
    bool first = true;
    ((out_ << (first ? "" : ",") << detail::csv_field(fields), first = false), ...);
    out_ << '\n';
    if (!out_) throw IoError("write failed: " + path_);
  }

 private:
  std::string path_;
  std::ofstream out_;
};

struct CsvTable {
  std::vector<std::string> header;
  std::vector<std::vector<std::string>> rows;

  std::size_t column(std::string_view name) const {
    for (std::size_t i = 0; i < header.size(); ++i) {
      if (header[i] == name) return i;
    }
    throw IoError("missing CSV column " + std::string(name));
  }
};

inline std::vector<std::string> split_csv_line(const std::string& line) {
  std::vector<std::string> out;
  std::string cell;
  std::istringstream ss(line);
  while (std::getline(ss, cell, ',')) out.push_back(cell);
  if (!line.empty() && line.back() == ',') out.emplace_back();
  return out;
}

inline CsvTable read_csv(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open " + path);
  CsvTable t;
  std::string line;
  if (!std::getline(in, line)) throw IoError("empty CSV file " + path);
  t.header = split_csv_line(line);
  while (std::getline(in, line)) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    t.rows.push_back(split_csv_line(line));
  }
  return t;
}

}  // namespace frsicl
