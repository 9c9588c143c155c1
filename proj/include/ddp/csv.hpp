#pragma once

#include <cstddef>
#include <filesystem>
#include <fstream>
#include <string>
#include <vector>

namespace ddp {

// Error attributable to an input file; carries file and line for reporting.
class DataError : public std::runtime_error {
 public:
  DataError(const std::string& file, std::size_t line, const std::string& what)
      : std::runtime_error(file + ":" + std::to_string(line) + ": " + what),
        file_(file), line_(line) {}
  explicit DataError(const std::string& what) : std::runtime_error(what), line_(0) {}
  const std::string& file() const { return file_; }
  std::size_t line() const { return line_; }

 private:
  std::string file_;
  std::size_t line_;
};

// Streaming RFC-4180 reader: quoted fields, embedded commas/newlines,
// doubled quotes. Tolerates CRLF endings.
class CsvReader {
 public:
  explicit CsvReader(const std::filesystem::path& path);

  // Reads the next record into `row`; false at end of file.
  bool next(std::vector<std::string>& row);

  // Physical line on which the current record started (1-based).
  std::size_t line() const { return record_line_; }
  const std::string& path() const { return path_; }

  DataError error(const std::string& what) const { return DataError(path_, record_line_, what); }

 private:
  std::ifstream in_;
  std::string path_;
  std::size_t line_ = 0;
  std::size_t record_line_ = 0;
};

class CsvWriter {
 public:
  explicit CsvWriter(const std::filesystem::path& path);
  void write_row(const std::vector<std::string>& fields);

 private:
  std::ofstream out_;
  std::string path_;
};

std::string csv_escape(const std::string& field);

// Shortest round-trip decimal rendering of a double (via std::to_chars), so
// exported files reparse to bit-identical values.
std::string format_double(double x);
double parse_double_field(const std::string& s, const CsvReader& reader);
long long parse_int_field(const std::string& s, const CsvReader& reader);

}  // namespace ddp
