#ifndef PELU_SRC_CSV_HPP
#define PELU_SRC_CSV_HPP

#include <cmath>
#include <concepts>
#include <filesystem>
#include <fstream>
#include <initializer_list>
#include <string>
#include <string_view>

#include <fmt/format.h>

#include "pelu/errors.hpp"

namespace pelu::csv {

/// Shortest round-trip representation; NaN becomes an empty field.
inline std::string field(double v) { return std::isnan(v) ? std::string() : fmt::format("{}", v); }
template <std::integral T>
std::string field(T v) {
  return fmt::format("{}", v);
}
inline std::string field(std::string_view v) {
  if (v.find_first_of(",\"\n\r") == std::string_view::npos) return std::string(v);
  std::string quoted = "\"";
  for (char c : v) {
    if (c == '"') quoted += '"';
    quoted += c;
  }
  return quoted + "\"";
}

/// Header row plus newline-terminated, comma-separated records.
class Writer {
 public:
  Writer(const std::filesystem::path& file, std::initializer_list<std::string_view> header) : out_(file) {
    if (!out_) throw std::runtime_error("cannot write " + file.string());
    bool first = true;
    for (auto name : header) {
      out_ << (first ? "" : ",") << name;
      first = false;
    }
    out_ << '\n';
  }

  template <typename... Fields>
  void row(const Fields&... fields) {
    bool first = true;
    ((out_ << (first ? "" : ",") << field(fields), first = false), ...);
    out_ << '\n';
  }

 private:
  std::ofstream out_;
};

}  // namespace pelu::csv

#endif  // PELU_SRC_CSV_HPP
