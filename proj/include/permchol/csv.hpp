#pragma once

#include <filesystem>
#include <istream>
#include <optional>
#include <string>
#include <vector>

#include "permchol/types.hpp"

namespace permchol {

/// Raw comma-separated cells; rows are observations.
struct CsvTable {
  std::vector<std::string> header;  // empty unless read with a header
  std::vector<std::vector<std::string>> rows;
  /// 1-based line number in the source of each row.
  std::vector<std::size_t> line_numbers;
};

/// Throws DataError on ragged rows or an unreadable file.
CsvTable read_csv(std::istream& in, bool has_header);
CsvTable read_csv(const std::filesystem::path& path, bool has_header);

/// Converts every column except `skip_column` to doubles. Throws DataError
/// naming the line and column of the first non-numeric or non-finite cell.
Matrix numeric_columns(const CsvTable& table,
                       std::optional<std::size_t> skip_column = std::nullopt);

}  // namespace permchol
