#pragma once

#include <string>
#include <vector>

namespace lrnerv {

struct CsvTable {
  std::vector<std::string> header;
  std::vector<std::vector<std::string>> rows;

  // Index of a header column; throws std::invalid_argument if absent.
  std::size_t column(const std::string& name) const;
};

// RFC 4180 quoting for fields containing commas, quotes or newlines.
std::string csv_field(const std::string& value);
std::string csv_line(const std::vector<std::string>& fields);
std::string format_csv(const CsvTable& table);
std::string format_number(double v);  // %.9g, empty for non-finite

CsvTable parse_csv(const std::string& text);
CsvTable read_csv(const std::string& path);
void write_text_file(const std::string& path, const std::string& text);

}  // namespace lrnerv
