#pragma once

#include <filesystem>
#include <string>
#include <vector>

#include "mass/aggregation.hpp"
#include "mass/dataset.hpp"
#include "mass/population.hpp"
#include "mass/provider.hpp"

namespace mass {

struct DailyStrategy {
  std::size_t type_index = 0;
  std::string date;
  std::string text;  // non-empty
};

// One cached decision: what agent (type_index, instance_index) picked that
// day. These records are the only input the backward optimization re-reads.
struct DecisionRecord {
  std::string date;
  std::size_t type_index = 0;
  std::size_t instance_index = 0;
  std::vector<std::string> selected;
  std::string provider_id;
};

struct DecisionMatrix {
  std::string date;
  SelectionFractions fractions;           // n_type x |universe|
  std::vector<DecisionRecord> selections; // one per (type, instance)
  std::size_t abstentions = 0;
};

// Stocks each agent selects per day: a 20% cut of the pool, at least one.
std::size_t selection_count(std::size_t n_sel);

// One strategy per agent type via the provider. A per-type provider failure
// falls back to that type's previous strategy with a warning; with no
// previous strategy the failure propagates (the day cannot run).
std::vector<DailyStrategy> generate_strategies(const AgentPopulation& population,
                                               const MacroDay& macro,
                                               const std::string& date,
                                               std::size_t day_index,
                                               DecisionProvider& provider,
                                               const std::vector<DailyStrategy>* previous,
                                               const DatasetSchema& schema,
                                               std::vector<std::string>* warnings = nullptr);

// Every instance picks from its pool through the provider; selections are
// validated against the pool and the requested count, repaired once, and
// assembled into per-type selection fractions. `workers` > 1 fans instances
// out over threads; results are identical for any worker count.
DecisionMatrix execute_decisions(const AgentPopulation& population,
                                 const MarketDataset& dataset, std::size_t day_index,
                                 const std::vector<DailyStrategy>& strategies,
                                 DecisionProvider& provider, std::size_t workers = 1);

// Rebuilds the fraction matrix from raw records (replay path and the
// recompute-V invariant).
SelectionFractions fractions_from_records(const std::vector<DecisionRecord>& records,
                                          const std::string& date, std::size_t n_type,
                                          std::size_t n_inv,
                                          const MarketDataset& dataset);

// Line-delimited JSON, one record per (date, type_index, instance_index).
void write_decision_records(const std::filesystem::path& path,
                            const std::vector<DecisionRecord>& records);
std::vector<DecisionRecord> read_decision_records(const std::filesystem::path& path);

}  // namespace mass
