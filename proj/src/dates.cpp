#include "ddp/dates.hpp"

#include <cstdio>
#include <stdexcept>

namespace ddp {

namespace {

// Civil <-> serial conversions, Gregorian calendar (Howard Hinnant's
// days_from_civil / civil_from_days).
std::int64_t days_from_civil(int y, int m, int d) {
  y -= m <= 2;
  const std::int64_t era = (y >= 0 ? y : y - 399) / 400;
  const unsigned yoe = static_cast<unsigned>(y - era * 400);
  const unsigned doy = (153u * static_cast<unsigned>(m + (m > 2 ? -3 : 9)) + 2u) / 5u +
                       static_cast<unsigned>(d) - 1u;
  const unsigned doe = yoe * 365 + yoe / 4 - yoe / 100 + doy;
  return era * 146097 + static_cast<std::int64_t>(doe) - 719468;
}

void civil_from_days(std::int64_t z, int& y, int& m, int& d) {
  z += 719468;
  const std::int64_t era = (z >= 0 ? z : z - 146096) / 146097;
  const unsigned doe = static_cast<unsigned>(z - era * 146097);
  const unsigned yoe = (doe - doe / 1460 + doe / 36524 - doe / 146096) / 365;
  const std::int64_t yy = static_cast<std::int64_t>(yoe) + era * 400;
  const unsigned doy = doe - (365 * yoe + yoe / 4 - yoe / 100);
  const unsigned mp = (5 * doy + 2) / 153;
  d = static_cast<int>(doy - (153 * mp + 2) / 5 + 1);
  m = static_cast<int>(mp + (mp < 10 ? 3 : -9));
  y = static_cast<int>(yy + (m <= 2));
}

int parse_int_field(const std::string& s, std::size_t pos, std::size_t len) {
  int v = 0;
  for (std::size_t i = pos; i < pos + len; ++i) {
    char c = i < s.size() ? s[i] : '\0';
    if (c < '0' || c > '9') throw std::invalid_argument("bad numeric field in date/time: '" + s + "'");
    v = v * 10 + (c - '0');
  }
  return v;
}

}  // namespace

Date Date::from_ymd(int year, int month, int day) {
  if (month < 1 || month > 12 || day < 1 || day > 31)
    throw std::invalid_argument("invalid calendar date");
  return Date(days_from_civil(year, month, day));
}

int Date::weekday() const {
  // 1970-01-01 is a Thursday (Monday-based index 3).
  std::int64_t w = (days_ + 3) % 7;
  if (w < 0) w += 7;
  return static_cast<int>(w);
}

void Date::to_ymd(int& year, int& month, int& day) const {
  civil_from_days(days_, year, month, day);
}

std::string Date::to_string() const {
  int y, m, d;
  to_ymd(y, m, d);
  char buf[16];
  std::snprintf(buf, sizeof(buf), "%04d-%02d-%02d", y, m, d);
  return buf;
}

Date parse_date(const std::string& text) {
  if (text.size() != 10 || text[4] != '-' || text[7] != '-')
    throw std::invalid_argument("expected YYYY-MM-DD, got '" + text + "'");
  int y = parse_int_field(text, 0, 4);
  int m = parse_int_field(text, 5, 2);
  int d = parse_int_field(text, 8, 2);
  return Date::from_ymd(y, m, d);
}

Timestamp parse_timestamp(const std::string& text) {
  if (text.size() < 19 || (text[10] != ' ' && text[10] != 'T'))
    throw std::invalid_argument("expected ISO-8601 timestamp, got '" + text + "'");
  Date day = parse_date(text.substr(0, 10));
  if (text[13] != ':' || text[16] != ':')
    throw std::invalid_argument("expected HH:MM:SS in timestamp: '" + text + "'");
  int hh = parse_int_field(text, 11, 2);
  int mm = parse_int_field(text, 14, 2);
  int ss = parse_int_field(text, 17, 2);
  if (hh > 23 || mm > 59 || ss > 60)
    throw std::invalid_argument("time of day out of range: '" + text + "'");
  Timestamp ts;
  ts.seconds = day.days() * 86400 + hh * 3600 + mm * 60 + ss;
  if (text.size() == 20 && text[19] == 'Z') {
    ts.is_utc = true;
  } else if (text.size() != 19) {
    throw std::invalid_argument("trailing characters in timestamp: '" + text + "'");
  }
  return ts;
}

std::string format_timestamp(std::int64_t local_seconds) {
  std::int64_t d = local_seconds / 86400;
  std::int64_t rem = local_seconds % 86400;
  if (rem < 0) { rem += 86400; --d; }
  int y, m, dd;
  Date(d).to_ymd(y, m, dd);
  char buf[24];
  std::snprintf(buf, sizeof(buf), "%04d-%02d-%02d %02d:%02d:%02d", y, m, dd,
                static_cast<int>(rem / 3600), static_cast<int>(rem / 60 % 60),
                static_cast<int>(rem % 60));
  return buf;
}

Date local_day(const Timestamp& ts, int utc_offset_minutes) {
  std::int64_t local = ts.seconds + (ts.is_utc ? utc_offset_minutes * 60LL : 0);
  std::int64_t d = local / 86400;
  if (local % 86400 < 0) --d;
  return Date(d);
}

}  // namespace ddp
