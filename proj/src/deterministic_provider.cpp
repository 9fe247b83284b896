#include "mass/deterministic_provider.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <random>
#include <sstream>

#include "mass/rng.hpp"

namespace mass {

DeterministicProvider::DeterministicProvider(DeterministicProviderConfig config)
    : config_(config) {}

AgentStyle DeterministicProvider::generate_style(const StyleRequest& request) {
  calls_++;
  auto rng = make_rng(mix_seed(config_.seed, "style", request.type_index));
  std::uniform_real_distribution<double> unit(0.0, 1.0);

  AgentStyle style;
  style.risk_appetite = static_cast<RiskAppetite>(
      std::uniform_int_distribution<int>(0, 4)(rng));
  style.holding_period = static_cast<HoldingPeriod>(
      std::uniform_int_distribution<int>(0, 4)(rng));
  style.strategy_consistency = std::round((0.3 + 0.65 * unit(rng)) * 100.0) / 100.0;
  style.rationality = std::round((0.3 + 0.65 * unit(rng)) * 100.0) / 100.0;
  if (config_.fixed_rationality) {
    style.rationality = std::clamp(*config_.fixed_rationality, 0.0, 1.0);
  }

  if (config_.forced_selector) {
    style.pool_selector.kind = *config_.forced_selector;
  } else if (request.metadata_available) {
    const int pick = std::uniform_int_distribution<int>(0, 3)(rng);
    style.pool_selector.kind = static_cast<PoolSelectorKind>(pick);
  } else {
    style.pool_selector.kind = PoolSelectorKind::random;
  }
  if (style.pool_selector.kind == PoolSelectorKind::industry_basis) {
    if (request.industries.empty()) {
      style.pool_selector.kind = PoolSelectorKind::random;
    } else {
      std::vector<std::string> industries = request.industries;
      std::shuffle(industries.begin(), industries.end(), rng);
      const std::size_t take =
          1 + std::uniform_int_distribution<std::size_t>(
                  0, std::min<std::size_t>(1, industries.size() - 1))(rng);
      style.pool_selector.industries.assign(industries.begin(),
                                            industries.begin() + take);
      std::sort(style.pool_selector.industries.begin(),
                style.pool_selector.industries.end());
    }
  }

  std::ostringstream outline;
  outline << "A " << to_string(style.risk_appetite)
          << " systematic approach holding positions for "
          << to_string(style.holding_period) << ", screening on ";
  if (request.features.empty()) {
    outline << "price action";
  } else {
    for (std::size_t i = 0; i < std::min<std::size_t>(3, request.features.size());
         ++i) {
      if (i > 0) outline << ", ";
      outline << request.features[i].name;
    }
  }
  outline << ".";
  style.outline = outline.str();
  style.others = "Sizing is even across picks; turnover kept moderate.";
  return style;
}

std::string DeterministicProvider::generate_strategy(const StrategyRequest& request) {
  calls_++;
  const AgentStyle& style = *request.style;
  std::ostringstream text;
  text << "Week of " << request.date << ": keep a " << to_string(style.risk_appetite)
       << " stance and rank the watchlist on ";
  if (request.features.empty()) {
    text << "recent price behaviour";
  } else {
    text << request.features.front().name;
  }
  text << ".";
  if (!request.macro_narrative.empty()) {
    text << " Macro context: " << request.macro_narrative;
  }
  return text.str();
}

std::vector<std::string> DeterministicProvider::select_stocks(
    const SelectionRequest& request) {
  calls_++;
  const std::size_t n_cols = request.columns.size();

  // Type-specific positive weights over the visible columns.
  auto weight_rng = make_rng(mix_seed(config_.seed, "weights", request.type_index));
  std::uniform_real_distribution<double> weight_dist(0.2, 1.0);
  std::vector<double> weights(n_cols);
  for (auto& w : weights) w = weight_dist(weight_rng);

  const double rationality = request.style ? request.style->rationality : 0.5;
  const double noise_mag = (1.0 - rationality) * config_.noise_scale;
  auto noise_rng = make_rng(mix_seed(
      mix_seed(config_.seed, "noise", request.type_index, request.instance_index),
      request.day_index));
  std::normal_distribution<double> noise(0.0, 1.0);

  std::vector<std::pair<double, std::size_t>> scored;
  scored.reserve(request.rows.size());
  for (std::size_t r = 0; r < request.rows.size(); ++r) {
    const PoolRow& row = request.rows[r];
    double score = 0;
    for (std::size_t c = 0; c < n_cols && c < row.features.size(); ++c) {
      if (row.features[c]) score += weights[c] * *row.features[c];
    }
    score += noise_mag * noise(noise_rng);
    scored.emplace_back(score, r);
  }
  std::sort(scored.begin(), scored.end(), [&](const auto& a, const auto& b) {
    if (a.first != b.first) return a.first > b.first;
    return request.rows[a.second].stock < request.rows[b.second].stock;
  });

  std::vector<std::string> out;
  const std::size_t take = std::min(request.num_stocks, scored.size());
  out.reserve(take);
  for (std::size_t i = 0; i < take; ++i) {
    out.push_back(request.rows[scored[i].second].stock);
  }
  return out;
}

}  // namespace mass
