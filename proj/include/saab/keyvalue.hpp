// Copyright 2026 The saab Authors
// SPDX-License-Identifier: Apache-2.0

// Flat key=value text records. Doubles are written in the shortest form
// that parses back to the same value, so a write/read cycle is exact.

#pragma once

#include <Eigen/Dense>
#include <charconv>
#include <cmath>
#include <cstdint>
#include <map>
#include <sstream>
#include <string>
#include <string_view>
#include <system_error>
#include <vector>

#include "saab/error.hpp"

namespace saab {

inline std::string format_double(double v) {
  if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
  char buf[64];
  const auto res = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, res.ptr);
}

inline std::string format_vector(const Eigen::VectorXd& v) {
  std::string out;
  for (Eigen::Index i = 0; i < v.size(); ++i) {
    if (i) out += ',';
    out += format_double(v(i));
  }
  return out;
}

// "rows x cols : entries in row-major order"
inline std::string format_matrix(const Eigen::MatrixXd& m) {
  std::string out = std::to_string(m.rows()) + "x" + std::to_string(m.cols()) + ":";
  for (Eigen::Index i = 0; i < m.rows(); ++i) {
    for (Eigen::Index j = 0; j < m.cols(); ++j) {
      if (i || j) out += ',';
      out += format_double(m(i, j));
    }
  }
  return out;
}

inline double parse_double(std::string_view s, const std::string& key) {
  if (s == "inf") return INFINITY;
  if (s == "-inf") return -INFINITY;
  double v = 0.0;
  const auto res = std::from_chars(s.data(), s.data() + s.size(), v);
  if (res.ec != std::errc() || res.ptr != s.data() + s.size()) {
    throw DomainError("invalid number '" + std::string(s) + "' for key '" + key + "'");
  }
  return v;
}

inline std::uint64_t parse_u64(std::string_view s, const std::string& key) {
  std::uint64_t v = 0;
  const auto res = std::from_chars(s.data(), s.data() + s.size(), v);
  if (res.ec != std::errc() || res.ptr != s.data() + s.size()) {
    throw DomainError("invalid integer '" + std::string(s) + "' for key '" + key + "'");
  }
  return v;
}

inline Eigen::VectorXd parse_vector(std::string_view s, const std::string& key) {
  std::vector<double> vals;
  if (!s.empty()) {
    std::size_t start = 0;
    while (true) {
      const std::size_t comma = s.find(',', start);
      vals.push_back(parse_double(s.substr(start, comma - start), key));
      if (comma == std::string_view::npos) break;
      start = comma + 1;
    }
  }
  return Eigen::Map<const Eigen::VectorXd>(vals.data(), static_cast<Eigen::Index>(vals.size()));
}

inline Eigen::MatrixXd parse_matrix(std::string_view s, const std::string& key) {
  const std::size_t x = s.find('x');
  const std::size_t colon = s.find(':');
  if (x == std::string_view::npos || colon == std::string_view::npos || x > colon) {
    throw DomainError("invalid matrix for key '" + key + "': expected ROWSxCOLS:entries");
  }
  const auto rows = static_cast<Eigen::Index>(parse_u64(s.substr(0, x), key));
  const auto cols = static_cast<Eigen::Index>(parse_u64(s.substr(x + 1, colon - x - 1), key));
  const Eigen::VectorXd v = parse_vector(s.substr(colon + 1), key);
  if (v.size() != rows * cols) {
    throw DomainError("matrix for key '" + key + "' has " + std::to_string(v.size()) +
                      " entries, expected " + std::to_string(rows * cols));
  }
  Eigen::MatrixXd m(rows, cols);
  for (Eigen::Index i = 0; i < rows; ++i) {
    for (Eigen::Index j = 0; j < cols; ++j) m(i, j) = v(i * cols + j);
  }
  return m;
}

// Parsed record. Lines are "key=value"; blank lines and lines starting
// with '#' are ignored. Every key must be consumed by the reader, so
// unknown keys are reported by finish().
class KeyValueRecord {
 public:
  static KeyValueRecord parse(const std::string& text) {
    KeyValueRecord rec;
    std::istringstream in(text);
    std::string line;
    int lineno = 0;
    while (std::getline(in, line)) {
      ++lineno;
      const auto first = line.find_first_not_of(" \t\r");
      if (first == std::string::npos || line[first] == '#') continue;
      const auto eq = line.find('=');
      if (eq == std::string::npos) {
        throw DomainError("line " + std::to_string(lineno) + ": expected key=value");
      }
      std::string key = trim(line.substr(0, eq));
      std::string value = trim(line.substr(eq + 1));
      if (key.empty()) throw DomainError("line " + std::to_string(lineno) + ": empty key");
      if (!rec.values_.emplace(key, value).second) {
        throw DomainError("duplicate key '" + key + "'");
      }
    }
    return rec;
  }

  bool has(const std::string& key) const { return values_.count(key) > 0; }

  const std::string& get(const std::string& key) {
    const auto it = values_.find(key);
    if (it == values_.end()) throw DomainError("missing key '" + key + "'");
    used_[key] = true;
    return it->second;
  }

  double get_double(const std::string& key) { return parse_double(get(key), key); }
  std::uint64_t get_u64(const std::string& key) { return parse_u64(get(key), key); }
  bool get_bool(const std::string& key) {
    const std::string& v = get(key);
    if (v == "1" || v == "true") return true;
    if (v == "0" || v == "false") return false;
    throw DomainError("invalid boolean '" + v + "' for key '" + key + "'");
  }
  Eigen::VectorXd get_vector(const std::string& key) { return parse_vector(get(key), key); }
  Eigen::MatrixXd get_matrix(const std::string& key) { return parse_matrix(get(key), key); }

  void finish() const {
    for (const auto& [key, value] : values_) {
      if (!used_.count(key)) throw DomainError("unknown key '" + key + "'");
    }
  }

 private:
  static std::string trim(const std::string& s) {
    const auto b = s.find_first_not_of(" \t\r");
    if (b == std::string::npos) return "";
    const auto e = s.find_last_not_of(" \t\r");
    return s.substr(b, e - b + 1);
  }

  std::map<std::string, std::string> values_;
  std::map<std::string, bool> used_;
};

}  // namespace saab
