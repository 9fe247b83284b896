#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "mass/dataset.hpp"
#include "mass/provider.hpp"
#include "mass/style.hpp"

namespace mass {

struct AgentInstance {
  std::size_t type_index = 0;
  std::size_t instance_index = 0;
  std::vector<std::string> pool;  // sorted stock ids, |pool| = n_sel
  std::uint64_t rng_seed = 0;
};

struct AgentType {
  std::size_t index = 0;
  AgentStyle style;
  std::vector<std::string> subset_columns;  // visible numeric features
  std::vector<TextKind> subset_kinds;
  std::vector<AgentInstance> instances;
};

struct PopulationConfig {
  std::size_t n_type = 1;
  std::size_t n_inv = 1;
  std::size_t n_sel = 1;
  std::uint64_t seed = 0;
  // Pins each type's visible columns; default draws random subsets sized
  // between 25% and 75% of the schema.
  std::optional<std::vector<std::vector<std::string>>> explicit_subsets;
  // Replaces the macro narrative fed to style generation with a fixed
  // placeholder (the no-macro ablation).
  bool blank_macro = false;
};

class AgentPopulation {
 public:
  std::vector<AgentType> types;
  std::size_t n_inv = 0;
  std::size_t n_sel = 0;
  std::uint64_t seed = 0;

  std::size_t n_type() const { return types.size(); }
  std::size_t total_agents() const { return n_type() * n_inv; }

  FeatureSubset subset_of(const DatasetSchema& schema, std::size_t type_index) const;
};

// Draws a candidate pool with the requested selector. Selectors needing
// industry or market-cap metadata throw ConfigError when it is absent.
// n_sel >= universe size returns the whole universe and sets `clamped`.
std::vector<std::string> select_pool(const PoolSelector& selector,
                                     const std::vector<std::string>& universe,
                                     const MarketDataset& dataset, std::size_t n_sel,
                                     std::uint64_t seed, bool* clamped = nullptr,
                                     std::vector<std::string>* warnings = nullptr);

// Builds n_type styles through the provider and draws each instance's static
// pool from its type's selector. Throws ProviderError on style-generation
// failure and ConfigError on invalid subsets or missing selector metadata.
AgentPopulation build_population(const MarketDataset& dataset,
                                 const PopulationConfig& config,
                                 DecisionProvider& provider, const MacroDay& macro,
                                 std::vector<std::string>* warnings = nullptr);

// Re-draws every instance pool for the given day (the daily-pool-update
// variant); pools stay static when this is never called.
void redraw_pools(AgentPopulation& population, const MarketDataset& dataset,
                  std::size_t day_index, std::vector<std::string>* warnings = nullptr);

// Placeholder narrative used when macro context is withheld.
extern const char* const kBlankMacroNarrative;

// Feature descriptions for a type's visible columns, in schema order.
std::vector<FeatureDesc> feature_descriptions(const DatasetSchema& schema,
                                              const std::vector<std::string>& columns);

// Industries present in the dataset metadata (sorted, unique).
std::vector<std::string> known_industries(const MarketDataset& dataset);

void save_population(const AgentPopulation& population,
                     const std::filesystem::path& path);
AgentPopulation load_population(const std::filesystem::path& path);

}  // namespace mass
