#pragma once

#include <iosfwd>
#include <string>
#include <vector>

namespace psw {

// In-memory CSV table. Cells keep their original text so that row subsets
// can be written back verbatim.
struct CsvTable {
  std::vector<std::string> header;
  std::vector<std::vector<std::string>> rows;

  int n_rows() const { return static_cast<int>(rows.size()); }
  int n_cols() const { return static_cast<int>(header.size()); }
};

// Reads comma-separated, UTF-8 text with a required header row. Quoted
// fields follow RFC 4180 ("" escapes a quote). Throws data_error on ragged
// rows or malformed quoting.
CsvTable read_csv(std::istream& in);
CsvTable read_csv_file(const std::string& path);

void write_csv(std::ostream& out, const CsvTable& table);
void write_csv_file(const std::string& path, const CsvTable& table);

}  // namespace psw
