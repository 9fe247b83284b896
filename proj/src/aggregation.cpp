#include "mass/aggregation.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <stdexcept>

namespace mass {

TypeDistribution::TypeDistribution(std::vector<double> weights)
    : weights_(std::move(weights)) {
  if (weights_.empty()) {
    throw std::invalid_argument("type distribution must be non-empty");
  }
  double sum = 0;
  for (double w : weights_) {
    if (w < 0 || !std::isfinite(w)) {
      throw std::invalid_argument("type distribution weights must be nonnegative");
    }
    sum += w;
  }
  if (sum <= 0) {
    throw std::invalid_argument("type distribution weights sum to zero");
  }
  for (double& w : weights_) w /= sum;
}

TypeDistribution TypeDistribution::uniform(std::size_t n_type) {
  if (n_type == 0) {
    throw std::invalid_argument("type distribution must be non-empty");
  }
  return TypeDistribution(std::vector<double>(n_type, 1.0));
}

DailySignal aggregate(const SelectionFractions& fractions, const TypeDistribution& d,
                      double alpha, const std::vector<std::string>& universe) {
  if (fractions.n_type != d.size()) {
    throw std::invalid_argument("decision matrix rows do not match distribution size");
  }
  if (fractions.n_stocks != universe.size()) {
    throw std::invalid_argument("decision matrix columns do not match universe size");
  }
  if (alpha < 0.0 || alpha > 1.0) {
    throw std::invalid_argument("alpha must lie in [0, 1]");
  }
  DailySignal out;
  out.date = fractions.date;
  out.alpha = alpha;
  out.records.resize(universe.size());
  for (std::size_t s = 0; s < universe.size(); ++s) {
    double mean = 0;
    for (std::size_t i = 0; i < d.size(); ++i) {
      mean += d[i] * fractions.at(i, s);
    }
    double var = 0;
    for (std::size_t i = 0; i < d.size(); ++i) {
      const double centered = fractions.at(i, s) - mean;
      var += d[i] * centered * centered;
    }
    StockSignal& rec = out.records[s];
    rec.stock = universe[s];
    rec.consensus = mean;
    rec.disagreement = std::sqrt(std::max(0.0, var));
    rec.signal = alpha * rec.consensus - (1.0 - alpha) * rec.disagreement;
  }
  return out;
}

std::vector<std::string> rank_stocks(const DailySignal& signal) {
  std::vector<std::size_t> order(signal.records.size());
  std::iota(order.begin(), order.end(), 0);
  std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
    const auto& ra = signal.records[a];
    const auto& rb = signal.records[b];
    if (ra.signal != rb.signal) return ra.signal > rb.signal;
    return ra.stock < rb.stock;
  });
  std::vector<std::string> ranked;
  ranked.reserve(order.size());
  for (std::size_t i : order) ranked.push_back(signal.records[i].stock);
  return ranked;
}

Portfolio top_k_portfolio(const std::vector<std::string>& ranked, std::size_t k,
                          bool* clamped) {
  if (k == 0) throw std::invalid_argument("portfolio size k must be at least 1");
  if (clamped) *clamped = false;
  if (k > ranked.size()) {
    k = ranked.size();
    if (clamped) *clamped = true;
  }
  Portfolio portfolio;
  portfolio.stocks.assign(ranked.begin(), ranked.begin() + k);
  portfolio.weights.assign(k, 1.0 / static_cast<double>(k));
  return portfolio;
}

}  // namespace mass
