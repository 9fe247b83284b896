#include <doctest.h>

#include <cmath>

#include "mass/backtest.hpp"
#include "support/synthetic.hpp"
#include "support/testutil.hpp"

using namespace mass;
using mass::testing::MarketSpec;
using mass::testing::TempDir;
using mass::testing::stock_code;

namespace {

// One signal per day ranking stocks by a fixed preference list (earlier in
// `preference` means higher signal).
std::vector<DailySignal> preference_signals(const MarketDataset& ds,
                                            const std::vector<std::string>& preference,
                                            std::size_t first_day,
                                            std::size_t last_day) {
  std::vector<DailySignal> signals;
  for (std::size_t d = first_day; d <= last_day; ++d) {
    DailySignal signal;
    signal.date = ds.calendar().day(d);
    for (const auto& stock : ds.universe()) {
      StockSignal rec;
      rec.stock = stock;
      const auto it = std::find(preference.begin(), preference.end(), stock);
      const double rank = it == preference.end()
                              ? 0.0
                              : static_cast<double>(preference.end() - it);
      rec.signal = rank;
      signal.records.push_back(rec);
    }
    signals.push_back(std::move(signal));
  }
  return signals;
}

}  // namespace

TEST_CASE("one-stock holding week matches hand arithmetic") {
  TempDir dir("bt1");
  MarketSpec spec;
  spec.n_stocks = 1;
  spec.n_days = 7;
  // Flat into the entry day, then +10% on the next mark, flat afterwards:
  // growth(0, t): ref(t+1) = ref(t) * (1 + g(t)).
  spec.growth = [](int, int t) { return t == 1 ? 0.10 : 0.0; };
  const auto ds = mass::testing::make_market(spec, dir.path());

  const auto signals = preference_signals(ds, {stock_code(0)}, 0, 5);
  BacktestConfig cfg;
  const auto result = run_backtest(signals, ds, benchmark_series(ds), cfg);

  // Entry at day 1 charges half the round trip on full notional; the exit
  // leg is never charged because the position is still held at the end.
  CHECK(result.summary.terminal_equity ==
        doctest::Approx(0.9995 * 1.10).epsilon(1e-10));
  REQUIRE(result.trades.size() == 1);
  CHECK(result.trades[0].action == "buy");
  CHECK(result.trades[0].weight_change == doctest::Approx(1.0));
  CHECK(result.equity.front() == 1.0);
}

TEST_CASE("zero returns and zero cost stay flat at 1.0") {
  TempDir dir("bt2");
  MarketSpec spec;
  spec.n_stocks = 3;
  spec.n_days = 8;
  spec.growth = [](int, int) { return 0.0; };
  const auto ds = mass::testing::make_market(spec, dir.path());
  const auto signals =
      preference_signals(ds, {stock_code(0), stock_code(1)}, 0, 6);
  BacktestConfig cfg;
  cfg.round_trip_cost = 0.0;
  const auto result = run_backtest(signals, ds, benchmark_series(ds), cfg);
  for (double v : result.equity) CHECK(v == doctest::Approx(1.0).epsilon(1e-12));
}

TEST_CASE("top fraction sizes the book") {
  TempDir dir("bt3");
  MarketSpec spec;
  spec.n_stocks = 30;
  spec.n_days = 6;
  spec.seed = 5;
  const auto ds = mass::testing::make_market(spec, dir.path());
  std::vector<std::string> preference = ds.universe();
  const auto signals = preference_signals(ds, preference, 0, 4);
  BacktestConfig cfg;
  const auto result = run_backtest(signals, ds, benchmark_series(ds), cfg);
  // First entry buys round(0.2 * 30) = 6 names.
  std::size_t first_day_buys = 0;
  const std::string entry_date = result.trades.front().date;
  for (const auto& trade : result.trades) {
    if (trade.date == entry_date) first_day_buys++;
  }
  CHECK(first_day_buys == 6);
}

TEST_CASE("cost monotonicity on a fixed trade sequence") {
  TempDir dir("bt4");
  MarketSpec spec;
  spec.n_stocks = 10;
  spec.n_days = 15;
  spec.seed = 9;
  const auto ds = mass::testing::make_market(spec, dir.path());
  // Alternate preference so every weekly rebalance trades.
  std::vector<DailySignal> signals;
  for (std::size_t d = 0; d + 1 < ds.calendar().size(); ++d) {
    const bool flip = (d / 5) % 2 == 0;
    std::vector<std::string> preference = ds.universe();
    if (flip) std::reverse(preference.begin(), preference.end());
    auto day = preference_signals(ds, preference, d, d);
    signals.push_back(std::move(day.front()));
  }
  double previous = 2.0;
  for (double cost : {0.0, 0.001, 0.005, 0.02, 0.05}) {
    BacktestConfig cfg;
    cfg.rebalance = BacktestConfig::Rebalance::daily;
    cfg.round_trip_cost = cost;
    const auto result = run_backtest(signals, ds, benchmark_series(ds), cfg);
    CHECK(result.summary.terminal_equity < previous + 1e-12);
    previous = result.summary.terminal_equity;
  }
}

TEST_CASE("limit-flagged stocks are never traded on their flagged day") {
  TempDir dir("bt5");
  MarketSpec spec;
  spec.n_stocks = 6;
  spec.n_days = 12;
  spec.seed = 13;
  // Stock 0 is limit-up on day 5 (a Monday in the fixture calendar), stock 1
  // limit-down the same day.
  spec.limits = [](int s, int t) {
    return std::make_pair(s == 0 && t == 5, s == 1 && t == 5);
  };
  const auto ds = mass::testing::make_market(spec, dir.path());
  const auto signals = preference_signals(
      ds, {stock_code(0), stock_code(1), stock_code(2)}, 0, 10);
  BacktestConfig cfg;
  cfg.rebalance = BacktestConfig::Rebalance::daily;
  cfg.top_fraction = 0.34;  // 2 of 6 names
  const auto result = run_backtest(signals, ds, benchmark_series(ds), cfg);
  const std::string flagged_date = ds.calendar().day(5);
  for (const auto& trade : result.trades) {
    if (trade.date != flagged_date) continue;
    CHECK(trade.stock != stock_code(0));
    CHECK(trade.stock != stock_code(1));
  }
}

TEST_CASE("equity change across a rebalance equals the cost charged") {
  TempDir dir("bt6");
  MarketSpec spec;
  spec.n_stocks = 8;
  spec.n_days = 14;
  spec.seed = 31;
  const auto ds = mass::testing::make_market(spec, dir.path());
  std::vector<DailySignal> signals;
  for (std::size_t d = 0; d + 1 < ds.calendar().size(); ++d) {
    std::vector<std::string> preference = ds.universe();
    if ((d / 3) % 2 == 0) std::reverse(preference.begin(), preference.end());
    auto day = preference_signals(ds, preference, d, d);
    signals.push_back(std::move(day.front()));
  }
  BacktestConfig cfg;
  cfg.rebalance = BacktestConfig::Rebalance::daily;
  cfg.round_trip_cost = 0.01;
  const auto result = run_backtest(signals, ds, benchmark_series(ds), cfg);

  // Replay the loop: each day's equity must equal the mark-to-market value
  // minus exactly the logged cost.
  std::map<std::string, double> cost_by_date;
  for (const auto& trade : result.trades) cost_by_date[trade.date] += trade.cost;
  std::map<std::string, double> weights;
  double equity = 1.0;
  for (std::size_t i = 0; i < result.dates.size(); ++i) {
    const std::string& date = result.dates[i];
    if (i > 0 && !weights.empty()) {
      double day_return = 0;
      std::map<std::string, double> drifted;
      for (const auto& [stock, weight] : weights) {
        const StockDay* prev = ds.stock_day(stock, result.dates[i - 1]);
        const StockDay* cur = ds.stock_day(stock, date);
        const double r = prev && cur ? cur->exec_price() / prev->exec_price() - 1.0
                                     : 0.0;
        day_return += weight * r;
        drifted[stock] = weight * (1 + r);
      }
      for (auto& [stock, w] : drifted) w /= 1 + day_return;
      weights = std::move(drifted);
      equity *= 1 + day_return;
    }
    if (cost_by_date.count(date)) {
      equity *= 1.0 - cost_by_date[date];
      // Apply the day's trades to the shadow book.
      for (const auto& trade : result.trades) {
        if (trade.date == date) weights[trade.stock] += trade.weight_change;
      }
      for (auto it = weights.begin(); it != weights.end();) {
        it = std::abs(it->second) < 1e-12 ? weights.erase(it) : std::next(it);
      }
    }
    REQUIRE(result.equity[i] == doctest::Approx(equity).epsilon(1e-9));
  }
}

TEST_CASE("uniform signals with daily rebalance track the equal-weight universe") {
  TempDir dir("bt7");
  MarketSpec spec;
  spec.n_stocks = 12;
  spec.n_days = 10;
  spec.seed = 77;
  const auto ds = mass::testing::make_market(spec, dir.path());
  std::vector<DailySignal> signals;
  for (std::size_t d = 0; d + 1 < ds.calendar().size(); ++d) {
    DailySignal signal;
    signal.date = ds.calendar().day(d);
    for (const auto& stock : ds.universe()) {
      signal.records.push_back(StockSignal{stock, 0.5, 0.0, 0.5});
    }
    signals.push_back(std::move(signal));
  }
  BacktestConfig cfg;
  cfg.rebalance = BacktestConfig::Rebalance::daily;
  cfg.round_trip_cost = 0.0;
  cfg.top_fraction = 1.0;
  const auto result = run_backtest(signals, ds, benchmark_series(ds), cfg);

  for (std::size_t i = 2; i < result.dates.size(); ++i) {
    double ew_return = 0;
    for (const auto& stock : ds.universe()) {
      const StockDay* prev = ds.stock_day(stock, result.dates[i - 1]);
      const StockDay* cur = ds.stock_day(stock, result.dates[i]);
      ew_return += cur->exec_price() / prev->exec_price() - 1.0;
    }
    ew_return /= static_cast<double>(ds.universe().size());
    REQUIRE(result.daily_returns[i - 1] == doctest::Approx(ew_return).epsilon(1e-10));
  }
}

TEST_CASE("excess_curve") {
  CHECK(excess_curve({1, 1.1, 1.2}, {1, 1.1, 1.2}) ==
        std::vector<double>{1.0, 1.0, 1.0});
  const auto doubled = excess_curve({1, 1.5, 2.0}, {1, 1, 1});
  CHECK(doubled.back() == doctest::Approx(2.0));
  // Hand-built 4-day fixture.
  const std::vector<double> equity = {1.0, 1.05, 1.10, 1.20};
  const std::vector<double> bench = {2.0, 2.02, 2.10, 2.16};
  const auto excess = excess_curve(equity, bench);
  for (std::size_t i = 0; i < 4; ++i) {
    CHECK(excess[i] ==
          doctest::Approx((equity[i] / bench[i]) / (1.0 / 2.0)).epsilon(1e-12));
  }
  CHECK_THROWS_AS(excess_curve({1, 2}, {1}), std::invalid_argument);
  CHECK_THROWS_AS(excess_curve({1, 2}, {1, -1}), std::invalid_argument);
}

TEST_CASE("all stocks untradable on a rebalance day holds and logs") {
  TempDir dir("bt8");
  MarketSpec spec;
  spec.n_stocks = 3;
  spec.n_days = 10;
  spec.limits = [](int, int t) { return std::make_pair(t == 5, false); };
  const auto ds = mass::testing::make_market(spec, dir.path());
  const auto signals = preference_signals(ds, {stock_code(0)}, 0, 8);
  BacktestConfig cfg;
  cfg.rebalance = BacktestConfig::Rebalance::daily;
  const auto result = run_backtest(signals, ds, benchmark_series(ds), cfg);
  bool logged = false;
  for (const auto& event : result.events) {
    if (event.find(ds.calendar().day(5)) != std::string::npos) logged = true;
  }
  CHECK(logged);
}
