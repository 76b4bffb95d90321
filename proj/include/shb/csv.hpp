#pragma once

#include <filesystem>
#include <string>
#include <vector>

namespace shb {

/// Round-trippable decimal form (%.17g), so reruns produce identical bytes.
std::string format_number(double v);

/// Writes a header line and one line per row; cells are written verbatim.
void write_csv(const std::filesystem::path& path, const std::vector<std::string>& header,
               const std::vector<std::vector<std::string>>& rows);

/// Column-major convenience: every column must have the same length.
void write_csv_columns(const std::filesystem::path& path, const std::vector<std::string>& header,
                       const std::vector<std::vector<double>>& columns);

struct CsvData {
  std::vector<std::string> header;
  std::vector<std::vector<std::string>> rows;

  /// Index of a header name; throws InvalidParameter if it is absent.
  std::size_t column(const std::string& name) const;
  std::vector<double> numeric_column(const std::string& name) const;
};

/// Plain comma-separated reader (no quoting), '#' lines skipped.
CsvData read_csv(const std::filesystem::path& path);

} // namespace shb
