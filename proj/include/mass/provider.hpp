#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "mass/dataset.hpp"
#include "mass/style.hpp"

namespace mass {

struct FeatureDesc {
  std::string name;
  std::string description;
};

struct StyleRequest {
  std::size_t type_index = 0;
  std::string macro_narrative;
  std::vector<FeatureDesc> features;  // the type's visible columns
  bool metadata_available = false;    // industry / market-cap data present
  std::vector<std::string> industries;
  std::uint64_t seed = 0;
};

struct StrategyRequest {
  std::size_t type_index = 0;
  std::string date;
  std::size_t day_index = 0;
  const AgentStyle* style = nullptr;
  std::string macro_narrative;
  std::vector<FeatureDesc> features;
  std::uint64_t seed = 0;
};

struct PoolRow {
  std::string stock;
  std::vector<std::optional<double>> features;  // aligned to request columns
  std::vector<TextItem> text_items;
};

struct SelectionRequest {
  std::size_t type_index = 0;
  std::size_t instance_index = 0;
  std::string date;
  std::size_t day_index = 0;
  std::string strategy_text;
  const AgentStyle* style = nullptr;
  std::vector<FeatureDesc> columns;
  std::vector<PoolRow> rows;  // the instance's visible pool for the day
  std::size_t num_stocks = 1;
  std::uint64_t seed = 0;
};

// Provider transport failed for good (retries exhausted, malformed output).
class ProviderError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// The engine's view of whatever produces styles, daily strategies and stock
// selections. Implementations must tolerate concurrent select_stocks calls;
// the engine issues at most one call per agent instance at a time.
class DecisionProvider {
 public:
  virtual ~DecisionProvider() = default;

  virtual std::string id() const = 0;

  virtual AgentStyle generate_style(const StyleRequest& request) = 0;

  // Narrative for one agent type and date, interpreting the latest macro
  // context within the type's style.
  virtual std::string generate_strategy(const StrategyRequest& request) = 0;

  // Codes drawn from request.rows, in the provider's preference order. The
  // caller validates membership and count.
  virtual std::vector<std::string> select_stocks(const SelectionRequest& request) = 0;

  // Total outbound invocations; replay paths must leave this at zero.
  virtual std::uint64_t call_count() const = 0;
};

}  // namespace mass
