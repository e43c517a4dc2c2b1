#pragma once

#include <cstdint>
#include <iosfwd>
#include <map>
#include <string>
#include <variant>
#include <vector>

namespace tucker {

using Cell = std::variant<std::int64_t, double, std::string>;

/// Column-named rows; every row has one cell per column.
struct Table {
  std::vector<std::string> columns;
  std::vector<std::vector<Cell>> rows;
  /// Free-form key=value pairs written into the header comment.
  std::map<std::string, std::string> meta;

  std::size_t column(const std::string& name) const;  // throws InvalidArgument
  bool has_column(const std::string& name) const;
  void add_row(std::vector<Cell> row);
};

/// Shortest round-trip text for doubles, so equal values always print equally.
std::string format_cell(const Cell& c);

/// First line: "# tucker-csv v1 key=value ...", then the header and rows.
void write_csv(std::ostream& out, const Table& t);
void write_csv(const std::string& path, const Table& t);

/// Parsed cells are strings; meta comes from the header comment if present.
struct CsvData {
  std::vector<std::string> columns;
  std::vector<std::vector<std::string>> rows;
  std::map<std::string, std::string> meta;

  std::size_t column(const std::string& name) const;
  double number(std::size_t row, std::size_t col) const;
};

CsvData read_csv(std::istream& in);
CsvData read_csv(const std::string& path);

}  // namespace tucker
