#pragma once

#include <cstdint>
#include <string>
#include <vector>

namespace dnp {

// Numeric CSV table. Values are kept exactly as parsed so that
// write(read(file)) reproduces the file byte for byte; all writers emit
// decimals with 12 significant digits ("%.12g").
struct CsvTable {
  std::vector<std::string> header;
  std::vector<std::vector<double>> rows;

  int n_cols() const { return static_cast<int>(header.size()); }
  int n_rows() const { return static_cast<int>(rows.size()); }
  int col_index(const std::string& name) const;  // -1 when absent
};

std::string format_g12(double v);

CsvTable read_csv(const std::string& path);
void write_csv(const std::string& path, const CsvTable& table);

std::string read_text_file(const std::string& path);
void write_text_file(const std::string& path, const std::string& content);

std::uint64_t fnv1a64(const std::string& bytes);

}  // namespace dnp
