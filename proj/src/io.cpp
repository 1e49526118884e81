#include "crisscross/io.hpp"

#include <charconv>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <istream>
#include <ostream>
#include <sstream>
#include <vector>

#include "crisscross/errors.hpp"

namespace crisscross {

std::string format_double(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

void write_csv(const ObservedDataset& data, std::ostream& out) {
  data.validate();
  out << "x,y,r_x,r_y\n";
  for (std::size_t i = 0; i < data.size(); ++i) {
    if (data.r_x[i]) out << format_double(data.x[i]);
    out << ',';
    if (data.r_y[i]) out << format_double(data.y[i]);
    out << ',' << int(data.r_x[i]) << ',' << int(data.r_y[i]) << '\n';
  }
}

void save_dataset(const ObservedDataset& data, const std::string& path) {
  std::ofstream f(path, std::ios::binary);
  if (!f) throw ConfigError("cannot open '" + path + "' for writing");
  write_csv(data, f);
  if (!f) throw ConfigError("write to '" + path + "' failed");
}

namespace {

[[noreturn]] void fail(std::size_t line, const std::string& msg) {
  throw DataError("line " + std::to_string(line) + ": " + msg);
}

std::vector<std::string> split(const std::string& s) {
  std::vector<std::string> out;
  std::string cur;
  for (char c : s) {
    if (c == ',') {
      out.push_back(cur);
      cur.clear();
    } else {
      cur.push_back(c);
    }
  }
  out.push_back(cur);
  return out;
}

double parse_number(const std::string& s, std::size_t line, const char* col) {
  double v = 0.0;
  const char* b = s.data();
  const char* e = b + s.size();
  auto [p, ec] = std::from_chars(b, e, v);
  if (ec != std::errc() || p != e || !std::isfinite(v))
    fail(line, std::string("malformed number in column ") + col + ": '" + s + "'");
  return v;
}

int parse_bit(const std::string& s, std::size_t line, const char* col) {
  if (s == "0") return 0;
  if (s == "1") return 1;
  fail(line, std::string("column ") + col + " must be 0 or 1, got '" + s + "'");
}

}  // namespace

ObservedDataset read_csv(std::istream& in) {
  std::string line;
  std::size_t lineno = 0;
  if (!std::getline(in, line)) throw DataError("line 1: empty file, expected header x,y,r_x,r_y");
  ++lineno;
  if (!line.empty() && line.back() == '\r') line.pop_back();
  if (line != "x,y,r_x,r_y") fail(lineno, "expected header x,y,r_x,r_y");
  ObservedDataset data;
  while (std::getline(in, line)) {
    ++lineno;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    auto cells = split(line);
    if (cells.size() != 4) fail(lineno, "expected 4 fields, got " + std::to_string(cells.size()));
    const int rx = parse_bit(cells[2], lineno, "r_x");
    const int ry = parse_bit(cells[3], lineno, "r_y");
    std::optional<double> x, y;
    if (cells[0].empty()) {
      if (rx) fail(lineno, "x absent but r_x=1");
    } else {
      if (!rx) fail(lineno, "x present but r_x=0");
      x = parse_number(cells[0], lineno, "x");
    }
    if (cells[1].empty()) {
      if (ry) fail(lineno, "y absent but r_y=1");
    } else {
      if (!ry) fail(lineno, "y present but r_y=0");
      y = parse_number(cells[1], lineno, "y");
    }
    data.push_back(x, y);
  }
  return data;
}

ObservedDataset load_dataset(const std::string& path) {
  std::ifstream f(path, std::ios::binary);
  if (!f) throw DataError("cannot open '" + path + "'");
  return read_csv(f);
}

}  // namespace crisscross
