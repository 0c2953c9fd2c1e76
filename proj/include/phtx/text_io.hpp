#pragma once

// Plain-text helpers shared by the file formats: whitespace-separated real
// matrices, fixed-precision real formatting, and line tokenizing.

#include <Eigen/Dense>

#include <cstdio>
#include <fstream>
#include <istream>
#include <ostream>
#include <sstream>
#include <string>
#include <string_view>
#include <vector>

#include "phtx/errors.hpp"

namespace phtx {

using Vec = Eigen::VectorXd;
using Mat = Eigen::MatrixXd;

/// Reals are written with 10 significant digits and '.' as the separator.
inline std::string format_real(double x) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.10g", x);
  return buf;
}

inline std::vector<std::string> split_ws(std::string_view line) {
  std::vector<std::string> out;
  std::istringstream in{std::string(line)};
  std::string tok;
  while (in >> tok) out.push_back(tok);
  return out;
}

inline double parse_real(const std::string& tok, std::size_t line) {
  try {
    std::size_t used = 0;
    double v = std::stod(tok, &used);
    if (used != tok.size()) throw ParseError("bad real '" + tok + "'", line);
    return v;
  } catch (const std::invalid_argument&) {
    throw ParseError("bad real '" + tok + "'", line);
  } catch (const std::out_of_range&) {
    throw ParseError("real out of range '" + tok + "'", line);
  }
}

inline long parse_int(const std::string& tok, std::size_t line) {
  try {
    std::size_t used = 0;
    long v = std::stol(tok, &used);
    if (used != tok.size()) throw ParseError("bad integer '" + tok + "'", line);
    return v;
  } catch (const std::invalid_argument&) {
    throw ParseError("bad integer '" + tok + "'", line);
  } catch (const std::out_of_range&) {
    throw ParseError("integer out of range '" + tok + "'", line);
  }
}

/// Strips a trailing '#' comment and surrounding whitespace.
inline std::string strip_comment(const std::string& line) {
  auto s = line.substr(0, line.find('#'));
  auto b = s.find_first_not_of(" \t\r");
  if (b == std::string::npos) return {};
  auto e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

/// Reads a matrix with one row per line. Blank lines and '#' comments are
/// skipped; every row must have the same number of columns.
inline Mat read_matrix(std::istream& in) {
  std::vector<std::vector<double>> rows;
  std::string raw;
  std::size_t lineno = 0;
  while (std::getline(in, raw)) {
    ++lineno;
    auto line = strip_comment(raw);
    if (line.empty()) continue;
    std::vector<double> row;
    for (const auto& tok : split_ws(line)) row.push_back(parse_real(tok, lineno));
    if (!rows.empty() && row.size() != rows.front().size())
      throw ParseError("row has " + std::to_string(row.size()) + " columns, expected " +
                           std::to_string(rows.front().size()),
                       lineno);
    rows.push_back(std::move(row));
  }
  if (rows.empty()) return Mat(0, 0);
  Mat m(rows.size(), rows.front().size());
  for (std::size_t r = 0; r < rows.size(); ++r)
    for (std::size_t c = 0; c < rows[r].size(); ++c) m(r, c) = rows[r][c];
  return m;
}

inline void write_matrix(std::ostream& out, const Mat& m) {
  for (Eigen::Index r = 0; r < m.rows(); ++r) {
    for (Eigen::Index c = 0; c < m.cols(); ++c) {
      if (c) out << ' ';
      out << format_real(m(r, c));
    }
    out << '\n';
  }
}

inline std::ifstream open_input(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw Error("cannot open '" + path + "'");
  return in;
}

}  // namespace phtx
