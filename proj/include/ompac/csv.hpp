#pragma once

#include <charconv>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <initializer_list>
#include <string>
#include <string_view>
#include <vector>

namespace ompac::csv {

// Shortest decimal form that reads back to the same double.
inline std::string number(double x) {
  char buf[32];
  const auto r = std::to_chars(buf, buf + sizeof buf, x);
  return std::string(buf, r.ptr);
}

inline std::string number(std::uint64_t x) { return std::to_string(x); }
inline std::string number(std::int64_t x) { return std::to_string(x); }
inline std::string number(int x) { return std::to_string(x); }

// Appends comma-separated rows to a file, writing the header if the file is new.
class Writer {
 public:
  Writer() = default;
  Writer(const std::filesystem::path& path, std::string_view header);

  void row(std::initializer_list<std::string> fields);
  void flush();
  std::uintmax_t bytes() const noexcept { return bytes_; }
  bool is_open() const noexcept { return out_.is_open(); }

 private:
  std::ofstream out_;
  std::uintmax_t bytes_ = 0;
};

using Row = std::vector<std::string>;

struct Table {
  std::vector<std::string> header;
  std::vector<Row> rows;

  std::size_t column(std::string_view name) const;  // throws if absent
};

// Minimal reader for the files this library writes (no quoting).
Table read(const std::filesystem::path& path);

std::vector<std::string> split(std::string_view line, char sep = ',');

}  // namespace ompac::csv
