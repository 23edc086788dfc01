#pragma once

#include <fstream>
#include <string>
#include <vector>

namespace bubblelab {

/// Shortest round-trip decimal representation ("inf"/"-inf"/"nan" for
/// non-finite values). Deterministic, locale independent.
std::string format_double(double v);
double parse_double(const std::string& s);

struct CsvTable {
  std::vector<std::string> header;
  std::vector<std::vector<std::string>> rows;
};

/// RFC-4180 reader: quoted fields, doubled quotes, CRLF or LF line ends.
CsvTable read_csv(const std::string& path);
CsvTable parse_csv(const std::string& text);

/// RFC-4180 writer with CRLF record separators.
class CsvWriter {
 public:
  CsvWriter(const std::string& path, const std::vector<std::string>& header);
  void row(const std::vector<double>& values);
  void row(const std::vector<std::string>& fields);

 private:
  std::ofstream out_;
  std::size_t columns_;
};

std::string csv_escape(const std::string& field);

}  // namespace bubblelab
