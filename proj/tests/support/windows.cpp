#include "support/windows.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <numeric>
#include <random>
#include <vector>

#include "mass/rng.hpp"

namespace mass::testing {

using mass::OptimizationWindow;
using mass::SelectionFractions;
using mass::WindowDay;

namespace {

WindowDay make_day(std::size_t n_type, std::size_t n_stocks, std::size_t day,
                   std::uint64_t seed, bool planted) {
  auto rng = mass::make_rng(mass::mix_seed(seed, day));
  std::uniform_real_distribution<double> ret(-0.05, 0.05);
  std::uniform_real_distribution<double> unit(0.0, 1.0);

  WindowDay out;
  out.date = "day-" + std::to_string(day);
  out.fractions.date = out.date;
  out.fractions.n_type = n_type;
  out.fractions.n_stocks = n_stocks;
  out.fractions.values.assign(n_type * n_stocks, 0.0);

  std::vector<double> labels(n_stocks);
  for (auto& y : labels) y = ret(rng);

  // Rank percentiles of the labels for the informative row.
  std::vector<std::size_t> order(n_stocks);
  std::iota(order.begin(), order.end(), 0);
  std::sort(order.begin(), order.end(),
            [&](std::size_t a, std::size_t b) { return labels[a] < labels[b]; });

  for (std::size_t i = 0; i < n_type; ++i) {
    for (std::size_t s = 0; s < n_stocks; ++s) {
      out.fractions.at(i, s) = unit(rng);
    }
  }
  if (planted) {
    for (std::size_t pos = 0; pos < n_stocks; ++pos) {
      out.fractions.at(0, order[pos]) =
          static_cast<double>(pos + 1) / static_cast<double>(n_stocks);
    }
  }
  for (std::size_t s = 0; s < n_stocks; ++s) {
    out.labeled_stocks.push_back(s);
    out.labels.push_back(labels[s]);
  }
  return out;
}

void enumerate_simplex(std::size_t n_type, std::size_t ticks,
                       std::vector<std::size_t>& current,
                       const std::function<void(const std::vector<std::size_t>&)>& fn) {
  if (current.size() + 1 == n_type) {
    std::size_t used = std::accumulate(current.begin(), current.end(), std::size_t{0});
    current.push_back(ticks - used);
    fn(current);
    current.pop_back();
    return;
  }
  std::size_t used = std::accumulate(current.begin(), current.end(), std::size_t{0});
  for (std::size_t t = 0; t + used <= ticks; ++t) {
    current.push_back(t);
    enumerate_simplex(n_type, ticks, current, fn);
    current.pop_back();
  }
}

}  // namespace

OptimizationWindow planted_window(std::size_t n_type, std::size_t n_stocks,
                                  std::size_t n_days, std::uint64_t seed) {
  OptimizationWindow window;
  for (std::size_t d = 0; d < n_days; ++d) {
    window.days.push_back(make_day(n_type, n_stocks, d, seed, true));
  }
  return window;
}

OptimizationWindow random_window(std::size_t n_type, std::size_t n_stocks,
                                 std::size_t n_days, std::uint64_t seed) {
  OptimizationWindow window;
  for (std::size_t d = 0; d < n_days; ++d) {
    window.days.push_back(make_day(n_type, n_stocks, d, seed, false));
  }
  return window;
}

double grid_best_objective(const OptimizationWindow& window, std::size_t n_type,
                           double step, double alpha) {
  const std::size_t ticks = static_cast<std::size_t>(std::llround(1.0 / step));
  double best = -2.0;
  std::vector<std::size_t> current;
  enumerate_simplex(n_type, ticks, current, [&](const std::vector<std::size_t>& point) {
    std::vector<double> weights(point.size());
    for (std::size_t i = 0; i < point.size(); ++i) {
      weights[i] = static_cast<double>(point[i]);
    }
    const double sum = std::accumulate(weights.begin(), weights.end(), 0.0);
    if (sum <= 0) return;
    const double value =
        mass::objective(mass::TypeDistribution(weights), window, alpha);
    best = std::max(best, value);
  });
  return best;
}

}  // namespace mass::testing
