#pragma once

// Comma-separated tables: mandatory header, '.' decimal point, LF endings.
// Numbers are written in the shortest form that parses back to the same
// double.

#include <filesystem>
#include <string>
#include <string_view>
#include <vector>

namespace twpa::io {

struct CsvTable {
  std::vector<std::string> header;
  std::vector<std::vector<std::string>> rows;

  /// Column index by name; throws ConfigError naming the missing column.
  std::size_t column(std::string_view name) const;
  bool has_column(std::string_view name) const;
  /// Parses a column as doubles; errors name the row and column.
  std::vector<double> numbers(std::string_view name) const;

  void add_row(std::vector<std::string> cells);
};

std::string format_double(double v);
/// Strict parse of a complete token; throws ConfigError on garbage.
double parse_double(std::string_view s, std::string_view context = {});

std::string to_csv(const CsvTable& t);
CsvTable parse_csv(std::string_view text, std::string_view source = "<memory>");

void write_csv(const std::filesystem::path& path, const CsvTable& t);
CsvTable read_csv(const std::filesystem::path& path);

/// Table with one numeric column per name.
CsvTable numeric_table(const std::vector<std::string>& header,
                       const std::vector<std::vector<double>>& columns);

}  // namespace twpa::io
