#pragma once

#include <optional>
#include <string>
#include <vector>

namespace mass {

// Pearson correlation coefficient. Undefined (nullopt) when either vector is
// constant or shorter than 2; throws std::invalid_argument on length mismatch.
std::optional<double> pearson(const std::vector<double>& x,
                              const std::vector<double>& y);

// Ranks with ties receiving the average of the positions they occupy
// (1-based).
std::vector<double> average_ranks(const std::vector<double>& values);

// Spearman rank correlation: Pearson over average-tie ranks. Same undefined
// conditions as pearson.
std::optional<double> spearman(const std::vector<double>& x,
                               const std::vector<double>& y);

struct DailyCrossSection {
  std::string date;
  std::vector<double> signal;
  std::vector<double> realized;  // same length, no missing entries
};

struct FactorReport {
  std::vector<std::string> dates;   // days that produced a correlation
  std::vector<double> ic_series;    // per-day Pearson
  std::vector<double> ric_series;   // per-day Spearman
  std::size_t skipped_days = 0;     // < 3 pairs or a constant cross-section
  std::optional<double> mean_ic;
  std::optional<double> mean_ric;
  std::optional<double> icir;   // mean / population std of the IC series
  std::optional<double> ricir;

  bool empty() const { return ic_series.empty(); }
};

// Per-day IC/RIC over the given cross-sections plus the series aggregates.
// Days with fewer than 3 pairs or a constant vector are skipped and counted.
FactorReport factor_report(const std::vector<DailyCrossSection>& days);

// (prod(1 + r))^(periods_per_year / n) - 1. Undefined on an empty series;
// throws std::invalid_argument when a return is <= -1.
std::optional<double> annualized_return(const std::vector<double>& periodic_returns,
                                        int periods_per_year);

// Largest peak-to-trough decline, max_t(1 - V_t / max_{tau<=t} V_tau).
// Throws std::invalid_argument on non-positive values.
double max_drawdown(const std::vector<double>& equity);

// mean(r - rf) / std_pop(r) * sqrt(periods_per_year). Undefined when the
// series is shorter than 2 or has zero variance.
std::optional<double> sharpe(const std::vector<double>& periodic_returns,
                             double risk_free_periodic, int periods_per_year);

// Mean and population standard deviation of a series.
std::pair<double, double> mean_and_std(const std::vector<double>& values);

}  // namespace mass
