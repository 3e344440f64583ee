#include "permchol/csv.hpp"

#include <charconv>
#include <cmath>
#include <fstream>
#include <sstream>

#include "permchol/errors.hpp"

namespace permchol {

namespace {

std::string trim(std::string_view s) {
  const auto first = s.find_first_not_of(" \t\r\n");
  if (first == std::string_view::npos) return {};
  const auto last = s.find_last_not_of(" \t\r\n");
  return std::string(s.substr(first, last - first + 1));
}

std::vector<std::string> split(const std::string& line) {
  std::vector<std::string> cells;
  std::size_t start = 0;
  for (;;) {
    const auto comma = line.find(',', start);
    cells.push_back(trim(std::string_view(line).substr(
        start, comma == std::string::npos ? std::string::npos : comma - start)));
    if (comma == std::string::npos) break;
    start = comma + 1;
  }
  return cells;
}

}  // namespace

CsvTable read_csv(std::istream& in, bool has_header) {
  CsvTable table;
  std::string line;
  std::size_t line_number = 0;
  std::size_t width = 0;
  while (std::getline(in, line)) {
    ++line_number;
    if (trim(line).empty()) continue;
    auto cells = split(line);
    if (width == 0) {
      width = cells.size();
    } else if (cells.size() != width) {
      throw DataError("line " + std::to_string(line_number) + " has " +
                      std::to_string(cells.size()) + " fields, expected " +
                      std::to_string(width));
    }
    if (has_header && table.header.empty()) {
      table.header = std::move(cells);
      continue;
    }
    table.rows.push_back(std::move(cells));
    table.line_numbers.push_back(line_number);
  }
  return table;
}

CsvTable read_csv(const std::filesystem::path& path, bool has_header) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot open " + path.string());
  return read_csv(in, has_header);
}

Matrix numeric_columns(const CsvTable& table,
                       std::optional<std::size_t> skip_column) {
  if (table.rows.empty()) throw DataError("no data rows");
  const std::size_t width = table.rows.front().size();
  const std::size_t out_width =
      width - (skip_column && *skip_column < width ? 1 : 0);
  Matrix X(static_cast<Index>(table.rows.size()), static_cast<Index>(out_width));
  for (std::size_t i = 0; i < table.rows.size(); ++i) {
    Index out_col = 0;
    for (std::size_t j = 0; j < width; ++j) {
      if (skip_column && j == *skip_column) continue;
      const std::string& cell = table.rows[i][j];
      double value = 0.0;
      const char* begin = cell.data();
      const char* end = begin + cell.size();
      if (!cell.empty() && *begin == '+') ++begin;
      const auto [ptr, ec] = std::from_chars(begin, end, value);
      if (cell.empty() || ec != std::errc() || ptr != end ||
          !std::isfinite(value)) {
        throw DataError("line " + std::to_string(table.line_numbers[i]) +
                        ", column " + std::to_string(j + 1) +
                        ": not a finite number: '" + cell + "'");
      }
      X(static_cast<Index>(i), out_col++) = value;
    }
  }
  return X;
}

}  // namespace permchol
