#pragma once

#include <cstddef>
#include <filesystem>
#include <iosfwd>
#include <string>
#include <string_view>
#include <vector>

namespace creditvol::csv {

struct Table {
  std::vector<std::string> header;
  std::vector<std::vector<std::string>> rows;
  // 1-based line number in the source file of each row.
  std::vector<std::size_t> line_numbers;

  // Index of a header column; throws DataError if absent.
  std::size_t column(std::string_view name) const;
};

Table read(const std::filesystem::path& path);
Table parse(std::istream& in);

std::vector<std::string> split_line(std::string_view line);

// Parses a finite double; throws DataError naming `row` otherwise.
double parse_number(std::string_view cell, std::size_t row);

// Shortest round-trip representation, so reruns are byte-identical.
std::string format_number(double v);

}  // namespace creditvol::csv
