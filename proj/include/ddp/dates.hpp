#pragma once

#include <cstdint>
#include <optional>
#include <string>

namespace ddp {

// Calendar date stored as days since 1970-01-01. Cheap value type used as a
// key everywhere; weekday index is 0 = Monday .. 6 = Sunday.
class Date {
 public:
  Date() : days_(0) {}
  explicit Date(std::int64_t days_since_epoch) : days_(days_since_epoch) {}
  static Date from_ymd(int year, int month, int day);

  std::int64_t days() const { return days_; }
  int weekday() const;  // 0 = Monday .. 6 = Sunday
  void to_ymd(int& year, int& month, int& day) const;
  std::string to_string() const;  // YYYY-MM-DD

  Date operator+(std::int64_t d) const { return Date(days_ + d); }
  Date operator-(std::int64_t d) const { return Date(days_ - d); }
  std::int64_t operator-(Date other) const { return days_ - other.days_; }
  Date& operator++() { ++days_; return *this; }

  friend bool operator==(Date a, Date b) { return a.days_ == b.days_; }
  friend bool operator!=(Date a, Date b) { return a.days_ != b.days_; }
  friend bool operator<(Date a, Date b) { return a.days_ < b.days_; }
  friend bool operator<=(Date a, Date b) { return a.days_ <= b.days_; }
  friend bool operator>(Date a, Date b) { return a.days_ > b.days_; }
  friend bool operator>=(Date a, Date b) { return a.days_ >= b.days_; }

 private:
  std::int64_t days_;
};

// Parses YYYY-MM-DD. Throws std::invalid_argument on malformed input.
Date parse_date(const std::string& text);

// Timestamp parsed from ISO-8601. `seconds` counts from the epoch in the
// frame the text was written in: naive timestamps (no suffix) are taken as
// dataset-local, a trailing 'Z' marks UTC and is shifted by the dataset
// offset at ingest time.
struct Timestamp {
  std::int64_t seconds = 0;
  bool is_utc = false;
};

// Accepts "YYYY-MM-DD HH:MM:SS" or with 'T' separator, optional trailing 'Z'.
Timestamp parse_timestamp(const std::string& text);

std::string format_timestamp(std::int64_t local_seconds);  // YYYY-MM-DD HH:MM:SS

// Local calendar day of a timestamp given the dataset UTC offset.
Date local_day(const Timestamp& ts, int utc_offset_minutes);

}  // namespace ddp
