#pragma once

#include <filesystem>
#include <fstream>
#include <initializer_list>
#include <string>
#include <vector>

namespace specprop::io {

// Shortest decimal text that round-trips to the same double; "nan", "inf"
// and "-inf" for non-finite values.
std::string format_number(double v);
std::string format_number(std::size_t v);

// Comma-separated file with a header row. Fields are written verbatim, so
// callers pass plain tokens (numbers, identifiers).
class CsvWriter {
 public:
  CsvWriter(const std::filesystem::path& path, const std::vector<std::string>& header);

  void row(const std::vector<std::string>& fields);
  std::size_t columns() const { return columns_; }
  void flush() { out_.flush(); }

 private:
  std::ofstream out_;
  std::size_t columns_;
  std::filesystem::path path_;
};

// Parsed CSV: header plus rows of string fields.
struct CsvTable {
  std::vector<std::string> header;
  std::vector<std::vector<std::string>> rows;

  // Index of a header column; throws std::out_of_range when absent.
  std::size_t column(const std::string& name) const;
};

CsvTable read_csv(const std::filesystem::path& path);

}  // namespace specprop::io
