#pragma once

#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "mass/aggregation.hpp"
#include "mass/decisions.hpp"
#include "mass/optimizer.hpp"

namespace mass {

// One completed trading day: the optimized distribution, the portfolio built
// that morning, and references into the store's decision/signal artifacts.
struct DaySnapshot {
  std::string date;
  std::vector<double> distribution;  // d_j, on the simplex
  double objective = 0;              // achieved by the optimizer (0 if skipped)
  bool optimized = false;            // false during warm-up, ablation or failure
  bool failed = false;
  std::vector<std::string> portfolio_stocks;
  std::vector<double> portfolio_weights;
  std::vector<std::string> window_dates;  // label days fed to the optimizer
  std::string decisions_ref;
  std::string signals_ref;
};

// On-disk layout of a single run:
//   config.json  population.json  run_report.json  signals.csv
//   snapshots/<date>.json  decisions/<date>.jsonl  strategies/<date>.json
//   trace/<date>.csv
class RunStore {
 public:
  explicit RunStore(std::filesystem::path root);

  const std::filesystem::path& root() const { return root_; }
  void initialize() const;

  std::filesystem::path config_path() const { return root_ / "config.json"; }
  std::filesystem::path population_path() const { return root_ / "population.json"; }
  std::filesystem::path signals_path() const { return root_ / "signals.csv"; }
  std::filesystem::path report_path() const { return root_ / "run_report.json"; }
  std::filesystem::path snapshot_path(const std::string& date) const;
  std::filesystem::path decisions_path(const std::string& date) const;
  std::filesystem::path strategies_path(const std::string& date) const;
  std::filesystem::path trace_path(const std::string& date) const;

  bool has_config() const { return std::filesystem::exists(config_path()); }
  void write_config(const nlohmann::json& config) const;
  nlohmann::json read_config() const;

  void write_snapshot(const DaySnapshot& snapshot) const;
  std::optional<DaySnapshot> read_snapshot(const std::string& date) const;
  std::vector<std::string> snapshot_dates() const;  // sorted ascending

  void append_signals(const DailySignal& signal) const;
  std::vector<DailySignal> read_signals() const;
  // Drops signal rows dated after `last_complete_date` (crash hygiene on
  // resume); empty string clears the file.
  void truncate_signals_after(const std::string& last_complete_date) const;

  void write_strategies(const std::string& date,
                        const std::vector<DailyStrategy>& strategies) const;
  std::optional<std::vector<DailyStrategy>> read_strategies(
      const std::string& date) const;
  std::vector<std::string> strategy_dates() const;  // sorted ascending

  void write_trace(const std::string& date,
                   const std::vector<AnnealTraceRow>& trace) const;

  void write_report(const nlohmann::json& report) const;
  std::optional<nlohmann::json> read_report() const;

 private:
  std::filesystem::path root_;
};

nlohmann::json snapshot_to_json(const DaySnapshot& snapshot);
DaySnapshot snapshot_from_json(const nlohmann::json& j);

}  // namespace mass
