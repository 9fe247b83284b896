#pragma once

#include <optional>
#include <string>
#include <unordered_map>
#include <vector>

namespace mass {

// Calendar dates are ISO-8601 strings (YYYY-MM-DD) throughout; the calendar
// owns the date <-> index mapping used by every daily table.
bool is_iso_date(const std::string& date);

// Days since 1970-01-01 for an ISO date. Throws std::invalid_argument on a
// malformed date.
long long days_from_epoch(const std::string& date);

// (ISO year, ISO week number) for grouping trading days into weeks.
std::pair<int, int> iso_week(const std::string& date);

class TradingCalendar {
 public:
  TradingCalendar() = default;

  // Dates must be valid ISO dates, strictly ascending and free of duplicates;
  // throws std::invalid_argument otherwise.
  explicit TradingCalendar(std::vector<std::string> days);

  std::size_t size() const { return days_.size(); }
  bool empty() const { return days_.empty(); }
  const std::vector<std::string>& days() const { return days_; }
  const std::string& day(std::size_t index) const { return days_.at(index); }

  bool contains(const std::string& date) const;
  std::optional<std::size_t> index_of(const std::string& date) const;

  // True when `date` starts a new ISO week relative to the previous trading
  // day (the first trading day of the run counts as a week start).
  bool is_week_start(std::size_t index) const;

 private:
  std::vector<std::string> days_;
  std::unordered_map<std::string, std::size_t> index_;
};

}  // namespace mass
