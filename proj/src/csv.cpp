#include "ddp/csv.hpp"

#include <charconv>
#include <system_error>

namespace ddp {

CsvReader::CsvReader(const std::filesystem::path& path)
    : in_(path, std::ios::binary), path_(path.string()) {
  if (!in_) throw DataError("cannot open file: " + path_);
}

bool CsvReader::next(std::vector<std::string>& row) {
  row.clear();
  int c = in_.get();
  // skip blank lines between records
  while (c == '\n' || c == '\r') {
    if (c == '\n') ++line_;
    c = in_.get();
  }
  if (c == EOF) return false;
  record_line_ = line_ + 1;

  std::string field;
  bool quoted = false;
  while (true) {
    if (quoted) {
      if (c == EOF) throw error("unterminated quoted field");
      if (c == '"') {
        int peek = in_.get();
        if (peek == '"') {
          field.push_back('"');
        } else {
          quoted = false;
          c = peek;
          continue;  // re-dispatch the char after the closing quote
        }
      } else {
        if (c == '\n') ++line_;
        field.push_back(static_cast<char>(c));
      }
    } else {
      if (c == EOF || c == '\n' || (c == '\r' && in_.peek() == '\n')) {
        if (c == '\r') { in_.get(); }
        if (c != EOF) ++line_;
        row.push_back(std::move(field));
        return true;
      }
      if (c == ',') {
        row.push_back(std::move(field));
        field.clear();
      } else if (c == '"' && field.empty()) {
        quoted = true;
      } else {
        field.push_back(static_cast<char>(c));
      }
    }
    c = in_.get();
  }
}

CsvWriter::CsvWriter(const std::filesystem::path& path)
    : out_(path, std::ios::binary), path_(path.string()) {
  if (!out_) throw DataError("cannot open file for writing: " + path_);
}

std::string csv_escape(const std::string& field) {
  bool needs_quote = field.find_first_of(",\"\r\n") != std::string::npos;
  if (!needs_quote) return field;
  std::string out = "\"";
  for (char c : field) {
    if (c == '"') out += "\"\"";
    else out.push_back(c);
  }
  out += "\"";
  return out;
}

void CsvWriter::write_row(const std::vector<std::string>& fields) {
  for (std::size_t i = 0; i < fields.size(); ++i) {
    if (i) out_.put(',');
    out_ << csv_escape(fields[i]);
  }
  out_.put('\n');
  if (!out_) throw DataError("write failed: " + path_);
}

std::string format_double(double x) {
  char buf[32];
  auto res = std::to_chars(buf, buf + sizeof(buf), x);
  return std::string(buf, res.ptr);
}

double parse_double_field(const std::string& s, const CsvReader& reader) {
  double v = 0.0;
  auto res = std::from_chars(s.data(), s.data() + s.size(), v);
  if (res.ec != std::errc() || res.ptr != s.data() + s.size())
    throw reader.error("expected a number, got '" + s + "'");
  return v;
}

long long parse_int_field(const std::string& s, const CsvReader& reader) {
  long long v = 0;
  auto res = std::from_chars(s.data(), s.data() + s.size(), v);
  if (res.ec != std::errc() || res.ptr != s.data() + s.size())
    throw reader.error("expected an integer, got '" + s + "'");
  return v;
}

}  // namespace ddp
