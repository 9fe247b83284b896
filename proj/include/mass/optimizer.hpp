#pragma once

#include <cstdint>
#include <random>
#include <string>
#include <vector>

#include "mass/aggregation.hpp"

namespace mass {

struct AnnealConfig {
  double initial_temperature = 40.0;
  int max_iterations = 100;
  double cooling_rate = 0.95;
  double step_scale = 2.0;
  std::uint64_t seed = 0;
};

enum class SimilarityMetric { rank_ic, pearson_ic };

// One already-traded day inside the look-back window: the cached selection
// fractions plus the stocks that have a realized label for that day.
struct WindowDay {
  std::string date;
  SelectionFractions fractions;
  std::vector<std::size_t> labeled_stocks;  // column indices into fractions
  std::vector<double> labels;               // aligned to labeled_stocks
};

// Days feeding the backward optimization. The current day is never included;
// every member day carries both cached decisions and available labels.
struct OptimizationWindow {
  std::vector<WindowDay> days;

  bool empty() const { return days.empty(); }
};

// Mean per-day rank correlation between the signal reconstructed under `d`
// and realized returns. Days with fewer than 3 labeled stocks or a constant
// cross-section are skipped; all days skipped yields 0.
double objective(const TypeDistribution& d, const OptimizationWindow& window,
                 double alpha, SimilarityMetric metric = SimilarityMetric::rank_ic);

// Pairwise mass transfer: moves delta ~ U(0, min(1, step_scale * (T/T0 + 0.1))
// * d_a) from one component to another, staying on the simplex by
// construction. n_type = 1 returns d unchanged.
TypeDistribution propose_neighbor(const TypeDistribution& d, double temperature,
                                  double initial_temperature, double step_scale,
                                  std::mt19937_64& rng);

struct AnnealTraceRow {
  int iteration = 0;
  double temperature = 0;
  double proposal_objective = 0;
  bool accepted = false;
  double best_objective = 0;
};

struct AnnealResult {
  TypeDistribution distribution;
  double objective_value = 0;  // objective of the returned distribution
  std::vector<AnnealTraceRow> trace;
};

// Simulated annealing over the simplex: accept improvements always, downhill
// moves with probability exp(delta / T), cool by cooling_rate per iteration,
// and return the best distribution seen (never worse than d_init). An empty
// window returns d_init untouched.
AnnealResult optimize_distribution(const OptimizationWindow& window,
                                   const TypeDistribution& d_init,
                                   const AnnealConfig& cfg, double alpha,
                                   SimilarityMetric metric = SimilarityMetric::rank_ic,
                                   bool keep_trace = false);

}  // namespace mass
