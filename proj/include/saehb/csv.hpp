#pragma once

#include <charconv>
#include <cstdio>
#include <fstream>
#include <stdexcept>
#include <string>
#include <vector>

namespace saehb {

// Input file violates the documented schema (missing/unknown columns, bad
// numbers, ragged rows).  Distinct from ValidationError: schema problems are
// about the file, validation problems are about the model.
class SchemaError : public std::runtime_error {
 public:
  explicit SchemaError(const std::string& message) : std::runtime_error(message) {}
};

// Shortest round-trip decimal for a double (17 significant digits).
inline std::string format_double(double v) {
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

inline double parse_double(const std::string& s, const std::string& context) {
  const char* b = s.data();
  const char* e = s.data() + s.size();
  while (b < e && (*b == ' ' || *b == '\t')) ++b;
  const char* stop = e;
  while (stop > b && (stop[-1] == ' ' || stop[-1] == '\t')) --stop;
  double value = 0.0;
  const auto [ptr, ec] = std::from_chars(b, stop, value);
  if (ec != std::errc() || ptr != stop)
    throw SchemaError(context + ": cannot parse number '" + s + "'");
  return value;
}

inline long long parse_integer(const std::string& s, const std::string& context) {
  const char* b = s.data();
  const char* e = s.data() + s.size();
  while (b < e && (*b == ' ' || *b == '\t')) ++b;
  const char* stop = e;
  while (stop > b && (stop[-1] == ' ' || stop[-1] == '\t')) --stop;
  long long value = 0;
  const auto [ptr, ec] = std::from_chars(b, stop, value);
  if (ec != std::errc() || ptr != stop)
    throw SchemaError(context + ": cannot parse integer '" + s + "'");
  return value;
}

struct CsvTable {
  std::vector<std::string> header;
  std::vector<std::vector<std::string>> rows;

  int column(const std::string& name) const {
    for (std::size_t j = 0; j < header.size(); ++j)
      if (header[j] == name) return static_cast<int>(j);
    return -1;
  }
};

inline std::vector<std::string> split_csv_line(const std::string& line) {
  std::vector<std::string> out;
  std::string cur;
  for (char ch : line) {
    if (ch == ',') {
      out.push_back(cur);
      cur.clear();
    } else if (ch != '\r') {
      cur += ch;
    }
  }
  out.push_back(cur);
  return out;
}

inline CsvTable read_csv(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw SchemaError("cannot open '" + path + "'");
  CsvTable table;
  std::string line;
  if (!std::getline(in, line)) throw SchemaError("'" + path + "' is empty");
  table.header = split_csv_line(line);
  std::size_t lineno = 1;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.empty() || line == "\r") continue;
    auto fields = split_csv_line(line);
    if (fields.size() != table.header.size())
      throw SchemaError(path + ":" + std::to_string(lineno) + ": expected " +
                        std::to_string(table.header.size()) + " fields, got " +
                        std::to_string(fields.size()));
    table.rows.push_back(std::move(fields));
  }
  return table;
}

class CsvWriter {
 public:
  explicit CsvWriter(const std::string& path) : out_(path, std::ios::binary) {
    if (!out_) throw std::runtime_error("cannot write '" + path + "'");
  }
  void row(const std::vector<std::string>& fields) {
    for (std::size_t j = 0; j < fields.size(); ++j) {
      if (j) out_ << ',';
      out_ << fields[j];
    }
    out_ << '\n';
  }

 private:
  std::ofstream out_;
};

}  // namespace saehb
