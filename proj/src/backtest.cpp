#include "mass/backtest.hpp"

#include <algorithm>
#include <cmath>
#include <set>
#include <stdexcept>

#include "mass/metrics.hpp"

namespace mass {

namespace {

std::optional<double> execution_price(const StockDay* day,
                                      BacktestConfig::ExecutionPrice mode) {
  if (!day) return std::nullopt;
  const double price = mode == BacktestConfig::ExecutionPrice::open
                           ? day->open
                           : day->exec_price();
  if (price <= 0) return std::nullopt;
  return price;
}

}  // namespace

std::map<std::string, double> benchmark_series(const MarketDataset& dataset) {
  std::map<std::string, double> series;
  for (std::size_t d = 0; d < dataset.calendar().size(); ++d) {
    if (const auto close = dataset.index_close(d)) {
      series[dataset.calendar().day(d)] = *close;
    }
  }
  return series;
}

std::vector<double> excess_curve(const std::vector<double>& equity,
                                 const std::vector<double>& benchmark) {
  if (equity.size() != benchmark.size()) {
    throw std::invalid_argument("excess_curve: misaligned series");
  }
  std::vector<double> out;
  out.reserve(equity.size());
  double base = 0;
  for (std::size_t i = 0; i < equity.size(); ++i) {
    if (benchmark[i] <= 0) {
      throw std::invalid_argument("excess_curve: benchmark must be positive");
    }
    const double ratio = equity[i] / benchmark[i];
    if (i == 0) base = ratio;
    out.push_back(ratio / base);
  }
  return out;
}

BacktestResult run_backtest(const std::vector<DailySignal>& signals,
                            const MarketDataset& dataset,
                            const std::map<std::string, double>& benchmark,
                            const BacktestConfig& cfg) {
  if (signals.empty()) {
    throw std::invalid_argument("run_backtest: no signals");
  }
  if (cfg.top_fraction <= 0 || cfg.top_fraction > 1) {
    throw std::invalid_argument("run_backtest: top_fraction must be in (0, 1]");
  }
  const TradingCalendar& cal = dataset.calendar();

  std::map<std::string, const DailySignal*> by_date;
  for (const auto& signal : signals) {
    if (!cal.contains(signal.date)) {
      throw std::invalid_argument("run_backtest: signal date outside calendar: " +
                                  signal.date);
    }
    by_date[signal.date] = &signal;
  }
  const std::size_t first = *cal.index_of(by_date.begin()->first);
  const std::size_t last_signal = *cal.index_of(by_date.rbegin()->first);
  const std::size_t last = std::min(last_signal + 1, cal.size() - 1);

  BacktestResult result;
  double equity = 1.0;
  std::map<std::string, double> weights;  // current portfolio, sums to 1 once invested
  bool invested = false;

  auto bench_at = [&](std::size_t day) -> double {
    // Forward-fill inside the range; the series must cover the start.
    for (std::size_t d = day + 1; d-- > 0;) {
      auto it = benchmark.find(cal.day(d));
      if (it != benchmark.end()) return it->second;
    }
    throw std::invalid_argument("run_backtest: benchmark does not cover " +
                                cal.day(day));
  };

  // The latest signal strictly before `day` is the actionable one: a signal
  // dated j prices in information through day j and trades at day j+1's
  // execution window.
  auto signal_before = [&](std::size_t day) -> const DailySignal* {
    for (std::size_t d = day; d-- > first;) {
      auto it = by_date.find(cal.day(d));
      if (it != by_date.end()) return it->second;
    }
    return nullptr;
  };

  for (std::size_t day = first; day <= last; ++day) {
    const std::string& date = cal.day(day);

    // Mark positions at today's execution window.
    if (day > first && invested) {
      double portfolio_return = 0;
      std::map<std::string, double> drifted;
      for (const auto& [stock, weight] : weights) {
        const auto prev = execution_price(dataset.stock_day(stock, cal.day(day - 1)),
                                          cfg.execution_price);
        const auto cur = execution_price(dataset.stock_day(stock, date),
                                         cfg.execution_price);
        const double r = (prev && cur) ? *cur / *prev - 1.0 : 0.0;
        portfolio_return += weight * r;
        drifted[stock] = weight * (1.0 + r);
      }
      for (auto& [stock, weight] : drifted) weight /= 1.0 + portfolio_return;
      weights = std::move(drifted);
      equity *= 1.0 + portfolio_return;
    }

    // Rebalance at the same mark. The first actionable day always trades;
    // afterwards the schedule decides.
    const DailySignal* actionable = signal_before(day);
    const bool scheduled = cfg.rebalance == BacktestConfig::Rebalance::daily ||
                           cal.is_week_start(day) || !invested;
    if (actionable && scheduled) {
      // Tradable today: priced and not limit-flagged.
      std::set<std::string> frozen;  // held but untradable, weight retained
      for (const auto& [stock, weight] : weights) {
        const StockDay* row = dataset.stock_day(stock, date);
        if (!row || row->limit_up || row->limit_down ||
            !execution_price(row, cfg.execution_price)) {
          frozen.insert(stock);
        }
      }
      DailySignal tradable;
      tradable.date = actionable->date;
      for (const auto& record : actionable->records) {
        const StockDay* row = dataset.stock_day(record.stock, date);
        if (!row || row->limit_up || row->limit_down) continue;
        if (!execution_price(row, cfg.execution_price)) continue;
        tradable.records.push_back(record);
      }
      if (tradable.records.empty()) {
        result.events.push_back(date + ": no tradable stocks; holding");
      } else {
        const auto ranked = rank_stocks(tradable);
        const std::size_t k = std::clamp<std::size_t>(
            static_cast<std::size_t>(
                std::llround(cfg.top_fraction * static_cast<double>(ranked.size()))),
            1, ranked.size());

        double frozen_weight = 0;
        for (const auto& stock : frozen) frozen_weight += weights[stock];
        std::map<std::string, double> target;
        for (const auto& stock : frozen) target[stock] = weights[stock];
        const double each = (1.0 - frozen_weight) / static_cast<double>(k);
        for (std::size_t i = 0; i < k; ++i) target[ranked[i]] += each;

        double buys = 0, sells = 0;
        std::vector<TradeLogEntry> day_trades;
        std::set<std::string> names;
        for (const auto& [stock, w] : weights) names.insert(stock);
        for (const auto& [stock, w] : target) names.insert(stock);
        for (const auto& stock : names) {
          const double before = weights.count(stock) ? weights.at(stock) : 0.0;
          const double after = target.count(stock) ? target.at(stock) : 0.0;
          const double change = after - before;
          if (std::abs(change) < 1e-15) continue;
          TradeLogEntry entry;
          entry.date = date;
          entry.stock = stock;
          entry.action = change > 0 ? "buy" : "sell";
          entry.weight_change = change;
          entry.cost = std::abs(change) * cfg.round_trip_cost / 2.0;
          (change > 0 ? buys : sells) += std::abs(change);
          day_trades.push_back(entry);
        }
        const double cost_fraction = (buys + sells) * cfg.round_trip_cost / 2.0;
        equity *= 1.0 - cost_fraction;
        weights = std::move(target);
        invested = true;
        result.trades.insert(result.trades.end(), day_trades.begin(),
                             day_trades.end());
      }
    }

    result.dates.push_back(date);
    result.equity.push_back(equity);
    result.benchmark.push_back(bench_at(day));
    if (result.dates.size() > 1) {
      result.daily_returns.push_back(equity / *(result.equity.end() - 2) - 1.0);
    }
  }

  // Normalize the benchmark and derive the excess curve.
  const double bench_base = result.benchmark.front();
  for (auto& b : result.benchmark) b /= bench_base;
  result.excess = excess_curve(result.equity, result.benchmark);

  BacktestSummary& summary = result.summary;
  summary.terminal_equity = result.equity.back();
  summary.terminal_excess = result.excess.back();
  summary.max_drawdown = max_drawdown(result.equity);
  if (!result.daily_returns.empty()) {
    summary.annualized_return =
        annualized_return(result.daily_returns, cfg.periods_per_year);
    summary.sharpe =
        sharpe(result.daily_returns, cfg.risk_free_periodic, cfg.periods_per_year);
    std::vector<double> excess_returns;
    for (std::size_t i = 1; i < result.excess.size(); ++i) {
      excess_returns.push_back(result.excess[i] / result.excess[i - 1] - 1.0);
    }
    summary.excess_annualized_return =
        annualized_return(excess_returns, cfg.periods_per_year);
  }
  return result;
}

}  // namespace mass
