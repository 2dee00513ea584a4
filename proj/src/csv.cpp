#include "ompac/csv.hpp"

#include <stdexcept>

namespace ompac::csv {

Writer::Writer(const std::filesystem::path& path, std::string_view header) {
  const bool fresh = !std::filesystem::exists(path) || std::filesystem::file_size(path) == 0;
  out_.open(path, std::ios::binary | std::ios::app);
  if (!out_) throw std::runtime_error("cannot open " + path.string() + " for writing");
  bytes_ = fresh ? 0 : std::filesystem::file_size(path);
  if (fresh) {
    out_ << header << '\n';
    bytes_ += header.size() + 1;
  }
}

void Writer::row(std::initializer_list<std::string> fields) {
  bool first = true;
  for (const std::string& f : fields) {
    if (!first) {
      out_.put(',');
      ++bytes_;
    }
    out_ << f;
    bytes_ += f.size();
    first = false;
  }
  out_.put('\n');
  ++bytes_;
}

void Writer::flush() {
  out_.flush();
  if (!out_) throw std::runtime_error("csv write failed");
}

std::vector<std::string> split(std::string_view line, char sep) {
  std::vector<std::string> out;
  std::size_t start = 0;
  for (;;) {
    const std::size_t pos = line.find(sep, start);
    if (pos == std::string_view::npos) {
      out.emplace_back(line.substr(start));
      return out;
    }
    out.emplace_back(line.substr(start, pos - start));
    start = pos + 1;
  }
}

std::size_t Table::column(std::string_view name) const {
  for (std::size_t c = 0; c < header.size(); ++c)
    if (header[c] == name) return c;
  throw std::runtime_error("csv column '" + std::string(name) + "' not found");
}

Table read(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot open " + path.string());
  Table t;
  std::string line;
  if (!std::getline(in, line)) throw std::runtime_error(path.string() + " is empty");
  t.header = split(line);
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    Row r = split(line);
    if (r.size() != t.header.size())
      throw std::runtime_error(path.string() + ": row has " + std::to_string(r.size()) +
                               " fields, header has " + std::to_string(t.header.size()));
    t.rows.push_back(std::move(r));
  }
  return t;
}

}  // namespace ompac::csv
