#include "mass/run_store.hpp"

#include <algorithm>
#include <fstream>

#include "mass/csv.hpp"
#include "mass/dataset.hpp"

namespace mass {

RunStore::RunStore(std::filesystem::path root) : root_(std::move(root)) {}

void RunStore::initialize() const {
  std::filesystem::create_directories(root_ / "snapshots");
  std::filesystem::create_directories(root_ / "decisions");
  std::filesystem::create_directories(root_ / "strategies");
}

std::filesystem::path RunStore::snapshot_path(const std::string& date) const {
  return root_ / "snapshots" / (date + ".json");
}

std::filesystem::path RunStore::decisions_path(const std::string& date) const {
  return root_ / "decisions" / (date + ".jsonl");
}

std::filesystem::path RunStore::strategies_path(const std::string& date) const {
  return root_ / "strategies" / (date + ".json");
}

std::filesystem::path RunStore::trace_path(const std::string& date) const {
  return root_ / "trace" / (date + ".csv");
}

void RunStore::write_config(const nlohmann::json& config) const {
  std::ofstream out(config_path());
  out << config.dump(2) << '\n';
}

nlohmann::json RunStore::read_config() const {
  std::ifstream in(config_path());
  if (!in.is_open()) {
    throw LoadError("run store has no config.json: " + root_.string());
  }
  return nlohmann::json::parse(in);
}

nlohmann::json snapshot_to_json(const DaySnapshot& snapshot) {
  nlohmann::json j;
  j["date"] = snapshot.date;
  j["distribution"] = snapshot.distribution;
  j["objective"] = snapshot.objective;
  j["optimized"] = snapshot.optimized;
  j["failed"] = snapshot.failed;
  j["portfolio"] = {{"stocks", snapshot.portfolio_stocks},
                    {"weights", snapshot.portfolio_weights}};
  j["window_dates"] = snapshot.window_dates;
  j["decisions"] = snapshot.decisions_ref;
  j["signals"] = snapshot.signals_ref;
  return j;
}

DaySnapshot snapshot_from_json(const nlohmann::json& j) {
  DaySnapshot snapshot;
  snapshot.date = j.at("date").get<std::string>();
  snapshot.distribution = j.at("distribution").get<std::vector<double>>();
  snapshot.objective = j.at("objective").get<double>();
  snapshot.optimized = j.value("optimized", false);
  snapshot.failed = j.value("failed", false);
  if (j.contains("portfolio")) {
    snapshot.portfolio_stocks =
        j["portfolio"].value("stocks", std::vector<std::string>{});
    snapshot.portfolio_weights =
        j["portfolio"].value("weights", std::vector<double>{});
  }
  snapshot.window_dates = j.value("window_dates", std::vector<std::string>{});
  snapshot.decisions_ref = j.value("decisions", "");
  snapshot.signals_ref = j.value("signals", "");
  return snapshot;
}

void RunStore::write_snapshot(const DaySnapshot& snapshot) const {
  std::ofstream out(snapshot_path(snapshot.date));
  out << snapshot_to_json(snapshot).dump(2) << '\n';
}

std::optional<DaySnapshot> RunStore::read_snapshot(const std::string& date) const {
  std::ifstream in(snapshot_path(date));
  if (!in.is_open()) return std::nullopt;
  return snapshot_from_json(nlohmann::json::parse(in));
}

std::vector<std::string> RunStore::snapshot_dates() const {
  std::vector<std::string> dates;
  const auto dir = root_ / "snapshots";
  if (!std::filesystem::exists(dir)) return dates;
  for (const auto& entry : std::filesystem::directory_iterator(dir)) {
    if (entry.path().extension() == ".json") {
      dates.push_back(entry.path().stem().string());
    }
  }
  std::sort(dates.begin(), dates.end());
  return dates;
}

void RunStore::append_signals(const DailySignal& signal) const {
  const bool fresh = !std::filesystem::exists(signals_path());
  std::ofstream out(signals_path(), std::ios::app);
  if (fresh) out << "date,stock,m,sigma,signal\n";
  for (const auto& record : signal.records) {
    out << signal.date << ',' << csv::escape_field(record.stock) << ','
        << format_double(record.consensus) << ','
        << format_double(record.disagreement) << ','
        << format_double(record.signal) << '\n';
  }
}

std::vector<DailySignal> RunStore::read_signals() const {
  std::vector<DailySignal> out;
  if (!std::filesystem::exists(signals_path())) return out;
  const auto table = csv::read_file(signals_path());
  DailySignal* current = nullptr;
  for (const auto& row : table.rows) {
    if (row.size() < 5) continue;
    if (!current || current->date != row[0]) {
      out.push_back(DailySignal{});
      current = &out.back();
      current->date = row[0];
    }
    StockSignal record;
    record.stock = row[1];
    record.consensus = parse_numeric_cell(row[2]).value_or(0.0);
    record.disagreement = parse_numeric_cell(row[3]).value_or(0.0);
    record.signal = parse_numeric_cell(row[4]).value_or(0.0);
    current->records.push_back(std::move(record));
  }
  return out;
}

void RunStore::truncate_signals_after(const std::string& last_complete_date) const {
  if (!std::filesystem::exists(signals_path())) return;
  const auto table = csv::read_file(signals_path());
  std::string content = csv::join_row(table.header);
  for (const auto& row : table.rows) {
    if (row.empty()) continue;
    if (last_complete_date.empty() || row[0] > last_complete_date) continue;
    content += csv::join_row(row);
  }
  std::ofstream out(signals_path(), std::ios::trunc);
  out << content;
}

void RunStore::write_strategies(const std::string& date,
                                const std::vector<DailyStrategy>& strategies) const {
  nlohmann::json j = nlohmann::json::array();
  for (const auto& strategy : strategies) {
    j.push_back({{"type_index", strategy.type_index},
                 {"date", strategy.date},
                 {"text", strategy.text}});
  }
  std::ofstream out(strategies_path(date));
  out << j.dump(2) << '\n';
}

std::optional<std::vector<DailyStrategy>> RunStore::read_strategies(
    const std::string& date) const {
  std::ifstream in(strategies_path(date));
  if (!in.is_open()) return std::nullopt;
  const nlohmann::json j = nlohmann::json::parse(in);
  std::vector<DailyStrategy> out;
  for (const auto& item : j) {
    DailyStrategy strategy;
    strategy.type_index = item.at("type_index").get<std::size_t>();
    strategy.date = item.at("date").get<std::string>();
    strategy.text = item.at("text").get<std::string>();
    out.push_back(std::move(strategy));
  }
  return out;
}

std::vector<std::string> RunStore::strategy_dates() const {
  std::vector<std::string> dates;
  const auto dir = root_ / "strategies";
  if (!std::filesystem::exists(dir)) return dates;
  for (const auto& entry : std::filesystem::directory_iterator(dir)) {
    if (entry.path().extension() == ".json") {
      dates.push_back(entry.path().stem().string());
    }
  }
  std::sort(dates.begin(), dates.end());
  return dates;
}

void RunStore::write_trace(const std::string& date,
                           const std::vector<AnnealTraceRow>& trace) const {
  std::filesystem::create_directories(root_ / "trace");
  std::ofstream out(trace_path(date));
  out << "iteration,temperature,proposal_objective,accepted,best_objective\n";
  for (const auto& row : trace) {
    out << row.iteration << ',' << format_double(row.temperature) << ','
        << format_double(row.proposal_objective) << ',' << (row.accepted ? 1 : 0)
        << ',' << format_double(row.best_objective) << '\n';
  }
}

void RunStore::write_report(const nlohmann::json& report) const {
  std::ofstream out(report_path());
  out << report.dump(2) << '\n';
}

std::optional<nlohmann::json> RunStore::read_report() const {
  std::ifstream in(report_path());
  if (!in.is_open()) return std::nullopt;
  return nlohmann::json::parse(in);
}

}  // namespace mass
