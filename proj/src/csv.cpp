#include "psw/csv.hpp"

#include <fstream>
#include <sstream>

#include "psw/errors.hpp"

namespace psw {

namespace {

// Splits one logical CSV record starting at the current stream position.
// Returns false at end of input. Handles quoted fields spanning newlines.
bool read_record(std::istream& in, std::vector<std::string>& fields) {
  fields.clear();
  int c = in.get();
  if (c == EOF) return false;

  std::string cell;
  bool in_quotes = false;
  bool any = false;
  while (true) {
    if (c == EOF) {
      if (in_quotes) throw data_error("csv: unterminated quoted field");
      fields.push_back(cell);
      return true;
    }
    char ch = static_cast<char>(c);
    if (in_quotes) {
      if (ch == '"') {
        if (in.peek() == '"') {
          cell.push_back('"');
          in.get();
        } else {
          in_quotes = false;
        }
      } else {
        cell.push_back(ch);
      }
    } else if (ch == '"') {
      if (!cell.empty()) throw data_error("csv: stray quote inside unquoted field");
      in_quotes = true;
      any = true;
    } else if (ch == ',') {
      fields.push_back(cell);
      cell.clear();
      any = true;
    } else if (ch == '\n') {
      if (!cell.empty() && cell.back() == '\r') cell.pop_back();
      fields.push_back(cell);
      return true;
    } else {
      cell.push_back(ch);
      any = true;
    }
    c = in.get();
  }
  (void)any;
}

bool needs_quoting(const std::string& s) {
  return s.find_first_of(",\"\n\r") != std::string::npos;
}

void write_cell(std::ostream& out, const std::string& s) {
  if (!needs_quoting(s)) {
    out << s;
    return;
  }
  out << '"';
  for (char ch : s) {
    if (ch == '"') out << "\"\"";
    else out << ch;
  }
  out << '"';
}

}  // namespace

CsvTable read_csv(std::istream& in) {
  CsvTable table;
  std::vector<std::string> fields;
  if (!read_record(in, fields) || fields.empty() ||
      (fields.size() == 1 && fields[0].empty())) {
    throw data_error("csv: missing header row");
  }
  table.header = fields;
  const size_t ncol = table.header.size();
  while (read_record(in, fields)) {
    if (fields.size() == 1 && fields[0].empty()) continue;  // blank line
    if (fields.size() != ncol) {
      std::ostringstream msg;
      msg << "csv: row " << table.rows.size() + 1 << " has " << fields.size()
          << " fields, expected " << ncol;
      throw data_error(msg.str());
    }
    table.rows.push_back(fields);
  }
  return table;
}

CsvTable read_csv_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw data_error("cannot open file: " + path);
  return read_csv(in);
}

void write_csv(std::ostream& out, const CsvTable& table) {
  for (size_t j = 0; j < table.header.size(); ++j) {
    if (j) out << ',';
    write_cell(out, table.header[j]);
  }
  out << '\n';
  for (const auto& row : table.rows) {
    for (size_t j = 0; j < row.size(); ++j) {
      if (j) out << ',';
      write_cell(out, row[j]);
    }
    out << '\n';
  }
}

void write_csv_file(const std::string& path, const CsvTable& table) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw data_error("cannot open file for writing: " + path);
  write_csv(out, table);
}

}  // namespace psw
