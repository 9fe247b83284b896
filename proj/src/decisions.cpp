#include "mass/decisions.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <fstream>
#include <mutex>
#include <set>
#include <thread>

#include <json.hpp>

#include "mass/rng.hpp"

namespace mass {

std::size_t selection_count(std::size_t n_sel) {
  return std::max<std::size_t>(
      1, static_cast<std::size_t>(std::llround(0.2 * static_cast<double>(n_sel))));
}

std::vector<DailyStrategy> generate_strategies(const AgentPopulation& population,
                                               const MacroDay& macro,
                                               const std::string& date,
                                               std::size_t day_index,
                                               DecisionProvider& provider,
                                               const std::vector<DailyStrategy>* previous,
                                               const DatasetSchema& schema,
                                               std::vector<std::string>* warnings) {
  std::vector<DailyStrategy> out;
  out.reserve(population.n_type());
  for (std::size_t i = 0; i < population.n_type(); ++i) {
    const AgentType& type = population.types[i];
    StrategyRequest request;
    request.type_index = i;
    request.date = date;
    request.day_index = day_index;
    request.style = &type.style;
    request.macro_narrative = macro.narrative;
    request.features = feature_descriptions(schema, type.subset_columns);
    request.seed = mix_seed(population.seed, "strategy", i, day_index);
    try {
      DailyStrategy strategy;
      strategy.type_index = i;
      strategy.date = date;
      strategy.text = provider.generate_strategy(request);
      if (strategy.text.empty()) {
        throw ProviderError("provider returned an empty strategy");
      }
      out.push_back(std::move(strategy));
    } catch (const std::exception& e) {
      if (previous && i < previous->size() && !(*previous)[i].text.empty()) {
        if (warnings) {
          warnings->push_back("strategy generation failed for type " +
                              std::to_string(i) + " (" + e.what() +
                              "); reusing the previous strategy");
        }
        DailyStrategy reused = (*previous)[i];
        reused.date = date;
        out.push_back(std::move(reused));
      } else {
        throw;
      }
    }
  }
  return out;
}

namespace {

// Membership-and-count repair: keep codes that exist in the pool, drop
// duplicates, truncate to the requested count in provider order.
std::vector<std::string> repair_selection(const std::vector<std::string>& codes,
                                          const std::set<std::string>& pool,
                                          std::size_t count) {
  std::vector<std::string> out;
  std::set<std::string> seen;
  for (const auto& code : codes) {
    if (out.size() == count) break;
    if (pool.count(code) && seen.insert(code).second) out.push_back(code);
  }
  return out;
}

bool selection_valid(const std::vector<std::string>& codes,
                     const std::set<std::string>& pool, std::size_t count) {
  if (codes.size() != count) return false;
  std::set<std::string> seen;
  for (const auto& code : codes) {
    if (!pool.count(code) || !seen.insert(code).second) return false;
  }
  return true;
}

}  // namespace

DecisionMatrix execute_decisions(const AgentPopulation& population,
                                 const MarketDataset& dataset, std::size_t day_index,
                                 const std::vector<DailyStrategy>& strategies,
                                 DecisionProvider& provider, std::size_t workers) {
  const std::string date = dataset.calendar().day(day_index);
  if (strategies.size() != population.n_type()) {
    throw std::invalid_argument("one strategy per agent type is required");
  }

  // Per-type request scaffolding shared by the type's instances.
  std::vector<std::vector<FeatureDesc>> type_columns(population.n_type());
  std::vector<FeatureSubset> type_subsets;
  type_subsets.reserve(population.n_type());
  for (std::size_t i = 0; i < population.n_type(); ++i) {
    const AgentType& type = population.types[i];
    type_columns[i] = feature_descriptions(dataset.schema(), type.subset_columns);
    type_subsets.push_back(population.subset_of(dataset.schema(), i));
  }

  const std::size_t total = population.total_agents();
  std::vector<DecisionRecord> records(total);
  std::atomic<std::size_t> next{0};
  std::atomic<std::size_t> abstained{0};
  std::exception_ptr failure;
  std::mutex failure_mutex;

  auto run_instance = [&](std::size_t flat) {
    const std::size_t i = flat / population.n_inv;
    const std::size_t k = flat % population.n_inv;
    const AgentType& type = population.types[i];
    const AgentInstance& instance = type.instances[k];

    SelectionRequest request;
    request.type_index = i;
    request.instance_index = k;
    request.date = date;
    request.day_index = day_index;
    request.strategy_text = strategies[i].text;
    request.style = &type.style;
    request.columns = type_columns[i];
    request.seed = mix_seed(instance.rng_seed, day_index);

    const FeatureSubset& subset = type_subsets[i];
    std::set<std::string> pool_set;
    for (const auto& stock : instance.pool) {
      const StockDay* day = dataset.stock_day(stock, date);
      if (!day) continue;  // suspended or unlisted that day
      PoolRow row;
      row.stock = stock;
      for (std::size_t c : subset.column_indices()) {
        row.features.push_back(day->numeric.at(c));
      }
      for (const auto& item : day->text_items) {
        if (subset.includes_kind(item.kind)) row.text_items.push_back(item);
      }
      request.rows.push_back(std::move(row));
      pool_set.insert(stock);
    }
    request.num_stocks =
        std::min(selection_count(population.n_sel), request.rows.size());

    DecisionRecord record;
    record.date = date;
    record.type_index = i;
    record.instance_index = k;
    record.provider_id = provider.id();
    if (request.num_stocks == 0) {
      abstained++;
      records[flat] = std::move(record);
      return;
    }

    std::vector<std::string> codes = provider.select_stocks(request);
    if (!selection_valid(codes, pool_set, request.num_stocks)) {
      codes = provider.select_stocks(request);  // one repair retry
    }
    if (!selection_valid(codes, pool_set, request.num_stocks)) {
      codes = repair_selection(codes, pool_set, request.num_stocks);
    }
    if (codes.empty()) abstained++;
    record.selected = std::move(codes);
    records[flat] = std::move(record);
  };

  auto worker = [&] {
    while (true) {
      const std::size_t flat = next.fetch_add(1);
      if (flat >= total) return;
      try {
        run_instance(flat);
      } catch (...) {
        std::lock_guard<std::mutex> lock(failure_mutex);
        if (!failure) failure = std::current_exception();
        return;
      }
    }
  };

  workers = std::max<std::size_t>(1, workers);
  if (workers == 1) {
    worker();
  } else {
    std::vector<std::thread> threads;
    for (std::size_t w = 0; w < workers; ++w) threads.emplace_back(worker);
    for (auto& t : threads) t.join();
  }
  if (failure) std::rethrow_exception(failure);

  DecisionMatrix matrix;
  matrix.date = date;
  matrix.selections = std::move(records);
  matrix.abstentions = abstained.load();
  matrix.fractions = fractions_from_records(matrix.selections, date,
                                            population.n_type(), population.n_inv,
                                            dataset);
  return matrix;
}

SelectionFractions fractions_from_records(const std::vector<DecisionRecord>& records,
                                          const std::string& date, std::size_t n_type,
                                          std::size_t n_inv,
                                          const MarketDataset& dataset) {
  SelectionFractions fractions;
  fractions.date = date;
  fractions.n_type = n_type;
  fractions.n_stocks = dataset.universe().size();
  fractions.values.assign(n_type * fractions.n_stocks, 0.0);
  for (const auto& record : records) {
    if (record.date != date) continue;
    for (const auto& stock : record.selected) {
      const auto s = dataset.stock_index(stock);
      if (!s) continue;
      fractions.at(record.type_index, *s) += 1.0;
    }
  }
  for (auto& v : fractions.values) v /= static_cast<double>(n_inv);
  return fractions;
}

void write_decision_records(const std::filesystem::path& path,
                            const std::vector<DecisionRecord>& records) {
  std::ofstream out(path);
  for (const auto& record : records) {
    nlohmann::json j;
    j["date"] = record.date;
    j["type_index"] = record.type_index;
    j["instance_index"] = record.instance_index;
    j["selected"] = record.selected;
    j["provider_id"] = record.provider_id;
    out << j.dump() << '\n';
  }
}

std::vector<DecisionRecord> read_decision_records(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in.is_open()) {
    throw LoadError("cannot open decision cache: " + path.string());
  }
  std::vector<DecisionRecord> records;
  std::string line;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    nlohmann::json j = nlohmann::json::parse(line);
    DecisionRecord record;
    record.date = j.at("date").get<std::string>();
    record.type_index = j.at("type_index").get<std::size_t>();
    record.instance_index = j.at("instance_index").get<std::size_t>();
    record.selected = j.at("selected").get<std::vector<std::string>>();
    record.provider_id = j.value("provider_id", "");
    records.push_back(std::move(record));
  }
  return records;
}

}  // namespace mass
