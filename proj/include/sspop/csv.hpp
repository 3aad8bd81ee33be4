#pragma once

#include <filesystem>
#include <fstream>
#include <initializer_list>
#include <string>
#include <string_view>
#include <vector>

namespace sspop {

/// Round-trip decimal form of a double: "%.17g".
std::string format_number(double x);

/// Comma-separated writer with a header row and '\n' line endings. Numbers
/// are written with 17 significant digits.
class CsvWriter {
 public:
  CsvWriter(const std::filesystem::path& path, std::initializer_list<std::string_view> header);

  void row(std::initializer_list<double> values);
  void row(const std::vector<std::string>& cells);
  void close();

 private:
  std::ofstream out_;
  std::filesystem::path path_;
  std::size_t columns_;
};

}  // namespace sspop
