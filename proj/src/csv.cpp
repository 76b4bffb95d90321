#include "shb/csv.hpp"

#include <cstdio>
#include <fstream>
#include <sstream>

#include "shb/errors.hpp"

namespace shb {

std::string format_number(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

namespace {

std::ofstream open_for_write(const std::filesystem::path& path) {
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::binary);
  if (!out) throw InvalidParameter("output", "cannot open " + path.string() + " for writing");
  return out;
}

void write_line(std::ofstream& out, const std::vector<std::string>& cells) {
  for (std::size_t i = 0; i < cells.size(); ++i) {
    if (i) out << ',';
    out << cells[i];
  }
  out << '\n';
}

std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string::npos) return "";
  const auto e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

} // namespace

void write_csv(const std::filesystem::path& path, const std::vector<std::string>& header,
               const std::vector<std::vector<std::string>>& rows) {
  auto out = open_for_write(path);
  write_line(out, header);
  for (const auto& r : rows) write_line(out, r);
}

void write_csv_columns(const std::filesystem::path& path, const std::vector<std::string>& header,
                       const std::vector<std::vector<double>>& columns) {
  const std::size_t n = columns.empty() ? 0 : columns.front().size();
  for (const auto& c : columns)
    if (c.size() != n) throw InvalidParameter("output", "CSV columns have different lengths");
  auto out = open_for_write(path);
  write_line(out, header);
  std::vector<std::string> cells(columns.size());
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = 0; j < columns.size(); ++j) cells[j] = format_number(columns[j][i]);
    write_line(out, cells);
  }
}

std::size_t CsvData::column(const std::string& name) const {
  for (std::size_t i = 0; i < header.size(); ++i)
    if (header[i] == name) return i;
  throw InvalidParameter(name, "column not present in CSV input");
}

std::vector<double> CsvData::numeric_column(const std::string& name) const {
  const std::size_t j = column(name);
  std::vector<double> out;
  out.reserve(rows.size());
  for (std::size_t i = 0; i < rows.size(); ++i) {
    const std::string& cell = rows[i].at(j);
    std::size_t used = 0;
    double v = 0.0;
    try {
      v = std::stod(cell, &used);
    } catch (const std::exception&) {
      used = 0;
    }
    if (used == 0 || used != cell.size())
      throw InvalidParameter(name, "row " + std::to_string(i + 1) + ": '" + cell + "' is not a number");
    out.push_back(v);
  }
  return out;
}

CsvData read_csv(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw InvalidParameter("input", "cannot open " + path.string());
  CsvData data;
  std::string line;
  bool have_header = false;
  while (std::getline(in, line)) {
    const std::string t = trim(line);
    if (t.empty() || t.front() == '#') continue;
    std::vector<std::string> cells;
    std::size_t start = 0;
    for (std::size_t comma; (comma = t.find(',', start)) != std::string::npos; start = comma + 1)
      cells.push_back(trim(t.substr(start, comma - start)));
    cells.push_back(trim(t.substr(start)));
    if (!have_header) {
      data.header = std::move(cells);
      have_header = true;
      continue;
    }
    if (cells.size() != data.header.size())
      throw InvalidParameter("input", path.string() + ": row has " + std::to_string(cells.size()) +
                                          " cells, header has " + std::to_string(data.header.size()));
    data.rows.push_back(std::move(cells));
  }
  if (!have_header) throw InvalidParameter("input", path.string() + " is empty");
  return data;
}

} // namespace shb
