#include "mass/style.hpp"

#include <algorithm>
#include <cctype>

namespace mass {

namespace {

std::string squeeze(const std::string& text) {
  // Lowercase with separators stripped, so "Moderately Conservative",
  // "moderately_conservative" and "moderatelyconservative" all match.
  std::string out;
  for (unsigned char c : text) {
    if (std::isalnum(c)) out.push_back(static_cast<char>(std::tolower(c)));
  }
  return out;
}

}  // namespace

std::string to_string(RiskAppetite value) {
  switch (value) {
    case RiskAppetite::conservative: return "conservative";
    case RiskAppetite::moderately_conservative: return "moderately conservative";
    case RiskAppetite::moderate: return "moderate";
    case RiskAppetite::moderately_aggressive: return "moderately aggressive";
    case RiskAppetite::aggressive: return "aggressive";
  }
  return "moderate";
}

std::string to_string(HoldingPeriod value) {
  switch (value) {
    case HoldingPeriod::one_day: return "one day";
    case HoldingPeriod::about_one_week: return "about one week";
    case HoldingPeriod::about_one_month: return "about one month";
    case HoldingPeriod::about_half_a_year: return "about half a year";
    case HoldingPeriod::more_than_one_year: return "more than one year";
  }
  return "about one month";
}

std::string selector_name(PoolSelectorKind kind) {
  switch (kind) {
    case PoolSelectorKind::random: return "RandomStockSelector";
    case PoolSelectorKind::industry_equal: return "IndustryEqualStockSelector";
    case PoolSelectorKind::mv_equal: return "MVEqualStockSelector";
    case PoolSelectorKind::industry_basis: return "IndustryBasisStockSelector";
  }
  return "RandomStockSelector";
}

std::optional<RiskAppetite> parse_risk_appetite(const std::string& text) {
  const std::string key = squeeze(text);
  if (key == "conservative") return RiskAppetite::conservative;
  if (key == "moderatelyconservative") return RiskAppetite::moderately_conservative;
  if (key == "moderate") return RiskAppetite::moderate;
  if (key == "moderatelyaggressive") return RiskAppetite::moderately_aggressive;
  if (key == "aggressive") return RiskAppetite::aggressive;
  return std::nullopt;
}

std::optional<HoldingPeriod> parse_holding_period(const std::string& text) {
  const std::string key = squeeze(text);
  if (key == "oneday") return HoldingPeriod::one_day;
  if (key == "aboutoneweek" || key == "oneweek") return HoldingPeriod::about_one_week;
  if (key == "aboutonemonth" || key == "onemonth") return HoldingPeriod::about_one_month;
  if (key == "abouthalfayear" || key == "halfayear") return HoldingPeriod::about_half_a_year;
  if (key == "morethanoneyear") return HoldingPeriod::more_than_one_year;
  return std::nullopt;
}

std::optional<PoolSelectorKind> parse_pool_selector(const std::string& text) {
  std::string key = squeeze(text);
  if (key.size() > 13 && key.compare(key.size() - 13, 13, "stockselector") == 0) {
    key.erase(key.size() - 13);
  }
  if (key == "random") return PoolSelectorKind::random;
  if (key == "industryequal") return PoolSelectorKind::industry_equal;
  if (key == "mvequal") return PoolSelectorKind::mv_equal;
  if (key == "industrybasis") return PoolSelectorKind::industry_basis;
  return std::nullopt;
}

nlohmann::json style_to_json(const AgentStyle& style) {
  nlohmann::json j;
  j["outline"] = style.outline;
  j["risk_appetite"] = to_string(style.risk_appetite);
  j["holding_period"] = to_string(style.holding_period);
  j["strategy_consistency"] = style.strategy_consistency;
  j["rationality"] = style.rationality;
  j["pool_selector"] = selector_name(style.pool_selector.kind);
  j["industries"] = style.pool_selector.industries;
  j["others"] = style.others;
  return j;
}

AgentStyle style_from_json(const nlohmann::json& j) {
  AgentStyle style;
  style.outline = j.value("outline", "");
  if (auto v = parse_risk_appetite(j.value("risk_appetite", ""))) {
    style.risk_appetite = *v;
  }
  if (auto v = parse_holding_period(j.value("holding_period", ""))) {
    style.holding_period = *v;
  }
  style.strategy_consistency =
      std::clamp(j.value("strategy_consistency", 0.5), 0.0, 1.0);
  style.rationality = std::clamp(j.value("rationality", 0.5), 0.0, 1.0);
  if (auto v = parse_pool_selector(j.value("pool_selector", ""))) {
    style.pool_selector.kind = *v;
  }
  style.pool_selector.industries =
      j.value("industries", std::vector<std::string>{});
  style.others = j.value("others", "");
  return style;
}

}  // namespace mass
