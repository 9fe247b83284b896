#pragma once

#include <cstdint>
#include <functional>
#include <filesystem>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "mass/backtest.hpp"
#include "mass/dataset.hpp"
#include "mass/deterministic_provider.hpp"
#include "mass/llm_gateway.hpp"
#include "mass/metrics.hpp"
#include "mass/optimizer.hpp"
#include "mass/run_store.hpp"

namespace mass {

enum class ProviderKind { deterministic, llm, replay };

std::string to_string(ProviderKind kind);
std::optional<ProviderKind> parse_provider_kind(const std::string& text);

struct AblationFlags {
  bool no_pmd = false;             // blank out the macro narrative
  bool no_bo = false;              // keep the type distribution uniform
  bool no_mdh = false;             // consensus only (alpha forced to 1)
  bool daily_pool_update = false;  // re-draw candidate pools every day
  bool daily_strategy_update = false;
};

struct RunConfig {
  std::string dataset_path;  // recorded in the store for resume/report
  std::string schema_path;   // empty: <dataset_path>/schema.txt
  std::size_t n_type = 16;
  std::size_t n_inv = 32;
  std::size_t n_sel = 30;
  double alpha = 0.5;
  std::size_t omega_opt = 5;
  AnnealConfig anneal;
  ProviderKind provider = ProviderKind::deterministic;
  double det_noise_scale = 1.0;
  std::optional<double> det_rationality;
  ProviderConfig llm;
  std::uint64_t seed = 0;
  std::string start_date;  // empty: first calendar day
  std::string end_date;    // empty: last day that can still earn a label
  AblationFlags ablations;
  double top_fraction = 0.2;  // daily portfolio k = round(fraction * universe)
  std::size_t workers = 1;
  bool keep_trace = false;
  // Pins per-type feature subsets (synthetic studies); default draws them.
  std::optional<std::vector<std::vector<std::string>>> explicit_subsets;
};

nlohmann::json run_config_to_json(const RunConfig& config);
RunConfig run_config_from_json(const nlohmann::json& j);
std::string run_config_hash(const RunConfig& config);
// Key paths whose values differ between the two configs (for resume refusal).
std::vector<std::string> config_diff(const nlohmann::json& stored,
                                     const nlohmann::json& current);

struct RunResult {
  std::filesystem::path store_root;
  std::vector<std::string> completed_dates;
  std::vector<std::string> failed_dates;
  std::vector<std::string> warnings;
  std::uint64_t provider_calls = 0;
  std::size_t abstentions = 0;
};

// Runs the daily loop over the configured date range: strategy refresh on
// the schedule, decision execution, aggregation under d_{j-1}, top-k
// portfolio construction, then backward optimization of d_j on the trailing
// labeled window. Every day persists a snapshot; an existing store with a
// matching config continues where it stopped.
RunResult run_simulation(const MarketDataset& dataset, const RunConfig& config,
                         const std::filesystem::path& store_root,
                         DecisionProvider* provider_override = nullptr,
                         const std::function<void(const DaySnapshot&)>& on_day = {});

// Continues a stored run. Refuses (ConfigError listing the changed keys)
// when the stored config does not match; a complete run is a no-op.
RunResult resume_simulation(const MarketDataset& dataset, const RunConfig& config,
                            const std::filesystem::path& store_root,
                            DecisionProvider* provider_override = nullptr,
                            const std::function<void(const DaySnapshot&)>& on_day = {});

// Pairs each day's signal cross-section with that day's realized labels.
std::vector<DailyCrossSection> signal_cross_sections(
    const std::vector<DailySignal>& signals, const MarketDataset& dataset,
    const LabelMatrix& labels);

struct SweepRow {
  std::size_t n_type = 0;
  std::size_t n_inv = 0;
  std::size_t total_agents = 0;
  std::optional<double> mean_ric;  // raw units
  bool failed = false;
  std::string error;
};

struct SweepReport {
  std::vector<SweepRow> rows;
};

// One simulation per (n_type, n_inv) pair with seeds derived from the base
// config; reports the mean rank IC per agent count. Counts must ascend in
// total agents. A failing run yields a marked row, not a sweep failure.
SweepReport scaling_sweep(const MarketDataset& dataset, const RunConfig& base,
                          const std::vector<std::pair<std::size_t, std::size_t>>& counts,
                          const std::filesystem::path& out_root);

}  // namespace mass
