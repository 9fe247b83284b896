#include "mass/optimizer.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

#include "mass/metrics.hpp"
#include "mass/rng.hpp"

namespace mass {

namespace {

// Signal values restricted to the day's labeled stocks; the rest of the
// universe cannot enter the correlation anyway.
std::vector<double> labeled_signals(const TypeDistribution& d, const WindowDay& day,
                                    double alpha) {
  std::vector<double> out;
  out.reserve(day.labeled_stocks.size());
  for (std::size_t s : day.labeled_stocks) {
    double mean = 0;
    for (std::size_t i = 0; i < d.size(); ++i) {
      mean += d[i] * day.fractions.at(i, s);
    }
    double var = 0;
    for (std::size_t i = 0; i < d.size(); ++i) {
      const double c = day.fractions.at(i, s) - mean;
      var += d[i] * c * c;
    }
    out.push_back(alpha * mean - (1.0 - alpha) * std::sqrt(std::max(0.0, var)));
  }
  return out;
}

}  // namespace

double objective(const TypeDistribution& d, const OptimizationWindow& window,
                 double alpha, SimilarityMetric metric) {
  double sum = 0;
  std::size_t used = 0;
  for (const auto& day : window.days) {
    if (day.labeled_stocks.size() < 3) continue;
    if (day.fractions.n_type != d.size()) {
      throw std::invalid_argument("window day has mismatched type count");
    }
    const std::vector<double> signal = labeled_signals(d, day, alpha);
    const auto corr = metric == SimilarityMetric::rank_ic
                          ? spearman(signal, day.labels)
                          : pearson(signal, day.labels);
    if (!corr) continue;  // constant cross-section
    sum += *corr;
    used++;
  }
  return used == 0 ? 0.0 : sum / static_cast<double>(used);
}

TypeDistribution propose_neighbor(const TypeDistribution& d, double temperature,
                                  double initial_temperature, double step_scale,
                                  std::mt19937_64& rng) {
  const std::size_t n = d.size();
  if (n < 2) return d;
  std::uniform_int_distribution<std::size_t> pick(0, n - 1);
  const std::size_t from = pick(rng);
  std::size_t to = pick(rng);
  while (to == from) to = pick(rng);
  const double fraction =
      std::min(1.0, step_scale * (temperature / initial_temperature + 0.1));
  const double bound = fraction * d[from];
  std::uniform_real_distribution<double> step(0.0, bound);
  const double delta = bound > 0 ? step(rng) : 0.0;
  std::vector<double> weights = d.weights();
  weights[from] -= delta;
  weights[to] += delta;
  if (weights[from] < 0) weights[from] = 0;
  return TypeDistribution(std::move(weights));
}

AnnealResult optimize_distribution(const OptimizationWindow& window,
                                   const TypeDistribution& d_init,
                                   const AnnealConfig& cfg, double alpha,
                                   SimilarityMetric metric, bool keep_trace) {
  if (cfg.initial_temperature <= 0 || cfg.cooling_rate <= 0 ||
      cfg.cooling_rate >= 1 || cfg.step_scale <= 0 || cfg.max_iterations < 0) {
    throw std::invalid_argument("invalid annealing configuration");
  }
  AnnealResult result;
  result.distribution = d_init;
  if (window.empty()) {
    result.objective_value = 0.0;
    return result;
  }

  std::mt19937_64 rng = make_rng(cfg.seed);
  TypeDistribution current = d_init;
  double current_value = objective(current, window, alpha, metric);
  TypeDistribution best = current;
  double best_value = current_value;

  double temperature = cfg.initial_temperature;
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  for (int it = 0; it < cfg.max_iterations; ++it) {
    const TypeDistribution proposal = propose_neighbor(
        current, temperature, cfg.initial_temperature, cfg.step_scale, rng);
    const double value = objective(proposal, window, alpha, metric);
    // Correlations are scored in percentage points so the reference initial
    // temperature of 40 spans an exploratory-to-greedy schedule.
    const double delta = (value - current_value) * 100.0;
    const bool accept = delta >= 0 || unit(rng) < std::exp(delta / temperature);
    if (accept) {
      current = proposal;
      current_value = value;
      if (value > best_value) {
        best = proposal;
        best_value = value;
      }
    }
    if (keep_trace) {
      result.trace.push_back(
          AnnealTraceRow{it, temperature, value, accept, best_value});
    }
    temperature *= cfg.cooling_rate;
  }
  result.distribution = best;
  result.objective_value = best_value;
  return result;
}

}  // namespace mass
