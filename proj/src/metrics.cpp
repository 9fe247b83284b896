#include "mass/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <stdexcept>

namespace mass {

std::pair<double, double> mean_and_std(const std::vector<double>& values) {
  if (values.empty()) return {0.0, 0.0};
  const double mean = std::accumulate(values.begin(), values.end(), 0.0) /
                      static_cast<double>(values.size());
  double var = 0;
  for (double v : values) {
    const double c = v - mean;
    var += c * c;
  }
  var /= static_cast<double>(values.size());
  return {mean, std::sqrt(var)};
}

std::optional<double> pearson(const std::vector<double>& x,
                              const std::vector<double>& y) {
  if (x.size() != y.size()) {
    throw std::invalid_argument("pearson: length mismatch");
  }
  const std::size_t n = x.size();
  if (n < 2) return std::nullopt;
  const double mx = std::accumulate(x.begin(), x.end(), 0.0) / static_cast<double>(n);
  const double my = std::accumulate(y.begin(), y.end(), 0.0) / static_cast<double>(n);
  double cov = 0, vx = 0, vy = 0;
  for (std::size_t i = 0; i < n; ++i) {
    const double cx = x[i] - mx;
    const double cy = y[i] - my;
    cov += cx * cy;
    vx += cx * cx;
    vy += cy * cy;
  }
  if (vx <= 0 || vy <= 0) return std::nullopt;
  const double r = cov / std::sqrt(vx * vy);
  return std::clamp(r, -1.0, 1.0);
}

std::vector<double> average_ranks(const std::vector<double>& values) {
  const std::size_t n = values.size();
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), 0);
  std::sort(order.begin(), order.end(),
            [&](std::size_t a, std::size_t b) { return values[a] < values[b]; });
  std::vector<double> ranks(n, 0.0);
  std::size_t i = 0;
  while (i < n) {
    std::size_t j = i + 1;
    while (j < n && values[order[j]] == values[order[i]]) ++j;
    const double avg = 0.5 * (static_cast<double>(i + 1) + static_cast<double>(j));
    for (std::size_t k = i; k < j; ++k) ranks[order[k]] = avg;
    i = j;
  }
  return ranks;
}

std::optional<double> spearman(const std::vector<double>& x,
                               const std::vector<double>& y) {
  if (x.size() != y.size()) {
    throw std::invalid_argument("spearman: length mismatch");
  }
  if (x.size() < 2) return std::nullopt;
  return pearson(average_ranks(x), average_ranks(y));
}

FactorReport factor_report(const std::vector<DailyCrossSection>& days) {
  FactorReport report;
  for (const auto& day : days) {
    if (day.signal.size() != day.realized.size()) {
      throw std::invalid_argument("factor_report: cross-section length mismatch");
    }
    if (day.signal.size() < 3) {
      report.skipped_days++;
      continue;
    }
    const auto ic = pearson(day.signal, day.realized);
    const auto ric = spearman(day.signal, day.realized);
    if (!ic || !ric) {
      report.skipped_days++;
      continue;
    }
    report.dates.push_back(day.date);
    report.ic_series.push_back(*ic);
    report.ric_series.push_back(*ric);
  }
  if (!report.ic_series.empty()) {
    const auto [ic_mean, ic_std] = mean_and_std(report.ic_series);
    const auto [ric_mean, ric_std] = mean_and_std(report.ric_series);
    report.mean_ic = ic_mean;
    report.mean_ric = ric_mean;
    if (ic_std > 0) report.icir = ic_mean / ic_std;
    if (ric_std > 0) report.ricir = ric_mean / ric_std;
  }
  return report;
}

std::optional<double> annualized_return(const std::vector<double>& periodic_returns,
                                        int periods_per_year) {
  if (periodic_returns.empty()) return std::nullopt;
  double growth = 1.0;
  for (double r : periodic_returns) {
    if (r <= -1.0) {
      throw std::invalid_argument("annualized_return: return at or below -100%");
    }
    growth *= 1.0 + r;
  }
  const double exponent =
      static_cast<double>(periods_per_year) / static_cast<double>(periodic_returns.size());
  return std::pow(growth, exponent) - 1.0;
}

double max_drawdown(const std::vector<double>& equity) {
  double peak = 0;
  double worst = 0;
  for (double v : equity) {
    if (v <= 0) {
      throw std::invalid_argument("max_drawdown: equity values must be positive");
    }
    peak = std::max(peak, v);
    worst = std::max(worst, 1.0 - v / peak);
  }
  return worst;
}

std::optional<double> sharpe(const std::vector<double>& periodic_returns,
                             double risk_free_periodic, int periods_per_year) {
  if (periodic_returns.size() < 2) return std::nullopt;
  const auto [mean, std_dev] = mean_and_std(periodic_returns);
  if (std_dev <= 0) return std::nullopt;
  return (mean - risk_free_periodic) / std_dev *
         std::sqrt(static_cast<double>(periods_per_year));
}

}  // namespace mass
