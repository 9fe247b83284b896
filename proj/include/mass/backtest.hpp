#pragma once

#include <map>
#include <optional>
#include <string>
#include <vector>

#include "mass/aggregation.hpp"
#include "mass/dataset.hpp"

namespace mass {

struct BacktestConfig {
  enum class Rebalance { weekly, daily };
  enum class ExecutionPrice { ref, open };

  Rebalance rebalance = Rebalance::weekly;
  double top_fraction = 0.2;       // equal-weighted share of the ranked list
  double round_trip_cost = 0.001;  // half charged on each side's notional
  ExecutionPrice execution_price = ExecutionPrice::ref;
  int periods_per_year = 252;
  double risk_free_periodic = 0.0;
};

struct TradeLogEntry {
  std::string date;
  std::string stock;
  std::string action;  // "buy" | "sell"
  double weight_change = 0;
  double cost = 0;  // equity fraction charged for this leg
};

struct BacktestSummary {
  std::optional<double> annualized_return;
  std::optional<double> sharpe;
  double max_drawdown = 0;
  std::optional<double> excess_annualized_return;
  double terminal_equity = 1.0;
  double terminal_excess = 1.0;
};

struct BacktestResult {
  std::vector<std::string> dates;
  std::vector<double> equity;     // starts at 1.0
  std::vector<double> benchmark;  // normalized to 1.0
  std::vector<double> excess;     // equity / benchmark, normalized
  std::vector<double> daily_returns;  // length dates.size() - 1
  std::vector<TradeLogEntry> trades;
  std::vector<std::string> events;
  BacktestSummary summary;
};

// Index-enhancement simulation over daily signals: positions enter at the
// execution window of the day after each signal; rebalance days re-rank the
// tradable universe (limit-up/limit-down and unpriced names excluded, held
// frozen), hold the top fraction equally weighted, and charge half the
// round-trip cost on each side's traded notional. Between rebalances weights
// drift with execution-price returns.
BacktestResult run_backtest(const std::vector<DailySignal>& signals,
                            const MarketDataset& dataset,
                            const std::map<std::string, double>& benchmark,
                            const BacktestConfig& cfg);

// Benchmark series from the dataset's index table.
std::map<std::string, double> benchmark_series(const MarketDataset& dataset);

// Ratio of two aligned curves, renormalized to start at 1.0. Throws
// std::invalid_argument on misaligned lengths or a non-positive benchmark.
std::vector<double> excess_curve(const std::vector<double>& equity,
                                 const std::vector<double>& benchmark);

}  // namespace mass
