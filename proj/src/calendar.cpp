#include "mass/calendar.hpp"

#include <cctype>
#include <stdexcept>

namespace mass {

namespace {

bool parse_date(const std::string& date, int& y, int& m, int& d) {
  if (date.size() != 10 || date[4] != '-' || date[7] != '-') return false;
  for (std::size_t i : {0u, 1u, 2u, 3u, 5u, 6u, 8u, 9u}) {
    if (!std::isdigit(static_cast<unsigned char>(date[i]))) return false;
  }
  y = std::stoi(date.substr(0, 4));
  m = std::stoi(date.substr(5, 2));
  d = std::stoi(date.substr(8, 2));
  if (m < 1 || m > 12 || d < 1 || d > 31) return false;
  return true;
}

// Howard Hinnant's civil-date algorithm.
long long days_from_civil(int y, int m, int d) {
  y -= m <= 2;
  const long long era = (y >= 0 ? y : y - 399) / 400;
  const unsigned yoe = static_cast<unsigned>(y - era * 400);
  const unsigned doy = (153u * (m + (m > 2 ? -3 : 9)) + 2) / 5 + d - 1;
  const unsigned doe = yoe * 365 + yoe / 4 - yoe / 100 + doy;
  return era * 146097 + static_cast<long long>(doe) - 719468;
}

}  // namespace

bool is_iso_date(const std::string& date) {
  int y, m, d;
  return parse_date(date, y, m, d);
}

long long days_from_epoch(const std::string& date) {
  int y, m, d;
  if (!parse_date(date, y, m, d)) {
    throw std::invalid_argument("malformed date: " + date);
  }
  return days_from_civil(y, m, d);
}

std::pair<int, int> iso_week(const std::string& date) {
  int y, m, d;
  if (!parse_date(date, y, m, d)) {
    throw std::invalid_argument("malformed date: " + date);
  }
  const long long days = days_from_civil(y, m, d);
  // 1970-01-01 was a Thursday; weekday 0 = Monday.
  const int weekday = static_cast<int>(((days % 7) + 7 + 3) % 7);
  // The ISO week of a date is the week containing its Thursday.
  const long long thursday = days - weekday + 3;
  // Year of that Thursday.
  int ty = y;
  for (int cand = y - 1; cand <= y + 1; ++cand) {
    if (thursday >= days_from_civil(cand, 1, 1) &&
        thursday < days_from_civil(cand + 1, 1, 1)) {
      ty = cand;
      break;
    }
  }
  const long long jan1 = days_from_civil(ty, 1, 1);
  const int week = static_cast<int>((thursday - jan1) / 7) + 1;
  return {ty, week};
}

TradingCalendar::TradingCalendar(std::vector<std::string> days)
    : days_(std::move(days)) {
  long long prev = 0;
  for (std::size_t i = 0; i < days_.size(); ++i) {
    const long long epoch = days_from_epoch(days_[i]);
    if (i > 0 && epoch <= prev) {
      throw std::invalid_argument("calendar dates must be strictly ascending: " +
                                  days_[i]);
    }
    prev = epoch;
    index_.emplace(days_[i], i);
  }
}

bool TradingCalendar::contains(const std::string& date) const {
  return index_.count(date) > 0;
}

std::optional<std::size_t> TradingCalendar::index_of(const std::string& date) const {
  auto it = index_.find(date);
  if (it == index_.end()) return std::nullopt;
  return it->second;
}

bool TradingCalendar::is_week_start(std::size_t index) const {
  if (index == 0) return true;
  return iso_week(days_.at(index)) != iso_week(days_.at(index - 1));
}

}  // namespace mass
