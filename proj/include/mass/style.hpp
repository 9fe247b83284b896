#pragma once

#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

namespace mass {

enum class RiskAppetite {
  conservative,
  moderately_conservative,
  moderate,
  moderately_aggressive,
  aggressive,
};

enum class HoldingPeriod {
  one_day,
  about_one_week,
  about_one_month,
  about_half_a_year,
  more_than_one_year,
};

enum class PoolSelectorKind { random, industry_equal, mv_equal, industry_basis };

struct PoolSelector {
  PoolSelectorKind kind = PoolSelectorKind::random;
  std::vector<std::string> industries;  // non-empty iff kind == industry_basis
};

// An agent type's investing persona: a short outline plus the structured
// fields the decision prompts and the pool construction consume.
struct AgentStyle {
  std::string outline;
  RiskAppetite risk_appetite = RiskAppetite::moderate;
  HoldingPeriod holding_period = HoldingPeriod::about_one_month;
  double strategy_consistency = 0.5;  // [0, 1]
  double rationality = 0.5;           // [0, 1]
  PoolSelector pool_selector;
  std::string others;
};

std::string to_string(RiskAppetite value);
std::string to_string(HoldingPeriod value);
std::string selector_name(PoolSelectorKind kind);  // e.g. "IndustryEqualStockSelector"

// Case-insensitive; accepts both prompt-style names ("MVEqualStockSelector")
// and bare ones ("MVEqual", "mv_equal").
std::optional<RiskAppetite> parse_risk_appetite(const std::string& text);
std::optional<HoldingPeriod> parse_holding_period(const std::string& text);
std::optional<PoolSelectorKind> parse_pool_selector(const std::string& text);

nlohmann::json style_to_json(const AgentStyle& style);
AgentStyle style_from_json(const nlohmann::json& j);

}  // namespace mass
