#include "sspop/csv.hpp"

#include "sspop/errors.hpp"

#include <cstdio>

namespace sspop {

std::string format_number(double x) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", x);
  return buf;
}

CsvWriter::CsvWriter(const std::filesystem::path& path,
                     std::initializer_list<std::string_view> header)
    : out_(path, std::ios::binary | std::ios::trunc), path_(path), columns_(header.size()) {
  if (!out_) throw ConfigError("cannot write " + path.string());
  bool first = true;
  for (auto h : header) {
    if (!first) out_ << ',';
    out_ << h;
    first = false;
  }
  out_ << '\n';
}

void CsvWriter::row(std::initializer_list<double> values) {
  if (values.size() != columns_) throw ConfigError("csv row width mismatch in " + path_.string());
  bool first = true;
  for (double v : values) {
    if (!first) out_ << ',';
    out_ << format_number(v);
    first = false;
  }
  out_ << '\n';
}

void CsvWriter::row(const std::vector<std::string>& cells) {
  if (cells.size() != columns_) throw ConfigError("csv row width mismatch in " + path_.string());
  for (std::size_t i = 0; i < cells.size(); ++i) {
    if (i > 0) out_ << ',';
    out_ << cells[i];
  }
  out_ << '\n';
}

void CsvWriter::close() {
  out_.close();
  if (!out_) throw ConfigError("failed writing " + path_.string());
}

}  // namespace sspop
