#pragma once

#include <cstdint>
#include <string>
#include <vector>

namespace mass {

// A point on the (n_type - 1)-simplex weighting agent types. Nonnegative
// weights are renormalized to sum to 1 on construction.
class TypeDistribution {
 public:
  TypeDistribution() = default;

  // Throws std::invalid_argument on negative entries or a zero sum.
  explicit TypeDistribution(std::vector<double> weights);

  static TypeDistribution uniform(std::size_t n_type);

  std::size_t size() const { return weights_.size(); }
  double operator[](std::size_t i) const { return weights_.at(i); }
  const std::vector<double>& weights() const { return weights_; }

  bool operator==(const TypeDistribution& other) const {
    return weights_ == other.weights_;
  }

 private:
  std::vector<double> weights_;
};

// Per-type selection fractions for one day: V[i][s] is the fraction of type
// i's instances that selected stock s.
struct SelectionFractions {
  std::string date;
  std::size_t n_type = 0;
  std::size_t n_stocks = 0;
  std::vector<double> values;  // row-major, n_type x n_stocks

  double at(std::size_t type, std::size_t stock) const {
    return values.at(type * n_stocks + stock);
  }
  double& at(std::size_t type, std::size_t stock) {
    return values.at(type * n_stocks + stock);
  }
};

struct StockSignal {
  std::string stock;
  double consensus = 0;     // m_s: distribution-weighted mean selection fraction
  double disagreement = 0;  // sigma_s: distribution-weighted std deviation
  double signal = 0;        // alpha * m_s - (1 - alpha) * sigma_s
};

struct DailySignal {
  std::string date;
  double alpha = 0.5;
  std::vector<StockSignal> records;  // aligned to the universe ordering
};

// Weighted consensus/disagreement aggregation over the day's decision
// fractions. Every stock in the universe gets a record; stocks no agent
// selected come out with m = sigma = 0 and signal 0.
// Throws std::invalid_argument on a row-count mismatch with `d`.
DailySignal aggregate(const SelectionFractions& fractions, const TypeDistribution& d,
                      double alpha, const std::vector<std::string>& universe);

// Stocks in descending signal order; ties broken by ascending stock id.
std::vector<std::string> rank_stocks(const DailySignal& signal);

struct Portfolio {
  std::vector<std::string> stocks;
  std::vector<double> weights;  // equal weights summing to 1
};

// First k of the ranked list, equally weighted. k larger than the list is
// clamped with `clamped` set for the caller's warning.
Portfolio top_k_portfolio(const std::vector<std::string>& ranked, std::size_t k,
                          bool* clamped = nullptr);

}  // namespace mass
