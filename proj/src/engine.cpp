#include "mass/engine.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <set>

#include "mass/decisions.hpp"
#include "mass/population.hpp"
#include "mass/rng.hpp"

namespace mass {

std::string to_string(ProviderKind kind) {
  switch (kind) {
    case ProviderKind::deterministic: return "deterministic";
    case ProviderKind::llm: return "llm";
    case ProviderKind::replay: return "replay";
  }
  return "deterministic";
}

std::optional<ProviderKind> parse_provider_kind(const std::string& text) {
  if (text == "deterministic") return ProviderKind::deterministic;
  if (text == "llm") return ProviderKind::llm;
  if (text == "replay") return ProviderKind::replay;
  return std::nullopt;
}

nlohmann::json run_config_to_json(const RunConfig& config) {
  nlohmann::json j;
  j["dataset_path"] = config.dataset_path;
  j["schema_path"] = config.schema_path;
  j["n_type"] = config.n_type;
  j["n_inv"] = config.n_inv;
  j["n_sel"] = config.n_sel;
  j["alpha"] = config.alpha;
  j["omega_opt"] = config.omega_opt;
  j["anneal"] = {{"initial_temperature", config.anneal.initial_temperature},
                 {"max_iterations", config.anneal.max_iterations},
                 {"cooling_rate", config.anneal.cooling_rate},
                 {"step_scale", config.anneal.step_scale},
                 {"seed", config.anneal.seed}};
  j["provider"] = to_string(config.provider);
  j["det_noise_scale"] = config.det_noise_scale;
  if (config.det_rationality) j["det_rationality"] = *config.det_rationality;
  j["llm"] = {{"endpoint_url", config.llm.endpoint_url},
              {"model_name", config.llm.model_name},
              {"style_temperature", config.llm.style_temperature},
              {"selection_temperature", config.llm.selection_temperature},
              {"max_retries", config.llm.max_retries},
              {"requests_per_minute", config.llm.requests_per_minute},
              {"api_key_env", config.llm.api_key_env},
              {"cache_dir", config.llm.cache_dir.string()}};
  j["seed"] = config.seed;
  j["start_date"] = config.start_date;
  j["end_date"] = config.end_date;
  j["ablations"] = {{"no_pmd", config.ablations.no_pmd},
                    {"no_bo", config.ablations.no_bo},
                    {"no_mdh", config.ablations.no_mdh},
                    {"daily_pool_update", config.ablations.daily_pool_update},
                    {"daily_strategy_update", config.ablations.daily_strategy_update}};
  j["top_fraction"] = config.top_fraction;
  j["workers"] = config.workers;
  j["keep_trace"] = config.keep_trace;
  if (config.explicit_subsets) j["explicit_subsets"] = *config.explicit_subsets;
  return j;
}

RunConfig run_config_from_json(const nlohmann::json& j) {
  RunConfig config;
  config.dataset_path = j.value("dataset_path", "");
  config.schema_path = j.value("schema_path", "");
  config.n_type = j.value("n_type", config.n_type);
  config.n_inv = j.value("n_inv", config.n_inv);
  config.n_sel = j.value("n_sel", config.n_sel);
  config.alpha = j.value("alpha", config.alpha);
  config.omega_opt = j.value("omega_opt", config.omega_opt);
  if (j.contains("anneal")) {
    const auto& a = j["anneal"];
    config.anneal.initial_temperature =
        a.value("initial_temperature", config.anneal.initial_temperature);
    config.anneal.max_iterations =
        a.value("max_iterations", config.anneal.max_iterations);
    config.anneal.cooling_rate = a.value("cooling_rate", config.anneal.cooling_rate);
    config.anneal.step_scale = a.value("step_scale", config.anneal.step_scale);
    config.anneal.seed = a.value("seed", config.anneal.seed);
  }
  if (auto kind = parse_provider_kind(j.value("provider", "deterministic"))) {
    config.provider = *kind;
  }
  config.det_noise_scale = j.value("det_noise_scale", config.det_noise_scale);
  if (j.contains("det_rationality")) {
    config.det_rationality = j["det_rationality"].get<double>();
  }
  if (j.contains("llm")) {
    const auto& l = j["llm"];
    config.llm.endpoint_url = l.value("endpoint_url", "");
    config.llm.model_name = l.value("model_name", "");
    config.llm.style_temperature =
        l.value("style_temperature", config.llm.style_temperature);
    config.llm.selection_temperature =
        l.value("selection_temperature", config.llm.selection_temperature);
    config.llm.max_retries = l.value("max_retries", config.llm.max_retries);
    config.llm.requests_per_minute =
        l.value("requests_per_minute", config.llm.requests_per_minute);
    config.llm.api_key_env = l.value("api_key_env", config.llm.api_key_env);
    config.llm.cache_dir = l.value("cache_dir", "");
  }
  config.seed = j.value("seed", config.seed);
  config.start_date = j.value("start_date", "");
  config.end_date = j.value("end_date", "");
  if (j.contains("ablations")) {
    const auto& a = j["ablations"];
    config.ablations.no_pmd = a.value("no_pmd", false);
    config.ablations.no_bo = a.value("no_bo", false);
    config.ablations.no_mdh = a.value("no_mdh", false);
    config.ablations.daily_pool_update = a.value("daily_pool_update", false);
    config.ablations.daily_strategy_update = a.value("daily_strategy_update", false);
  }
  config.top_fraction = j.value("top_fraction", config.top_fraction);
  config.workers = j.value("workers", config.workers);
  config.keep_trace = j.value("keep_trace", config.keep_trace);
  if (j.contains("explicit_subsets")) {
    config.explicit_subsets =
        j["explicit_subsets"].get<std::vector<std::vector<std::string>>>();
  }
  return config;
}

std::string run_config_hash(const RunConfig& config) {
  char buf[17];
  std::snprintf(buf, sizeof(buf), "%016llx",
                static_cast<unsigned long long>(
                    fnv1a64(run_config_to_json(config).dump())));
  return std::string(buf);
}

namespace {

void collect_diff(const nlohmann::json& stored, const nlohmann::json& current,
                  const std::string& prefix, std::vector<std::string>& out) {
  std::set<std::string> keys;
  if (stored.is_object()) {
    for (auto it = stored.begin(); it != stored.end(); ++it) keys.insert(it.key());
  }
  if (current.is_object()) {
    for (auto it = current.begin(); it != current.end(); ++it) keys.insert(it.key());
  }
  if (!stored.is_object() || !current.is_object()) {
    if (stored != current) out.push_back(prefix.empty() ? "<root>" : prefix);
    return;
  }
  for (const auto& key : keys) {
    const std::string path = prefix.empty() ? key : prefix + "." + key;
    if (!stored.contains(key) || !current.contains(key) ||
        stored[key].is_object() != current[key].is_object()) {
      if (!stored.contains(key) || !current.contains(key) ||
          stored[key] != current[key]) {
        out.push_back(path);
      }
      continue;
    }
    if (stored[key].is_object()) {
      collect_diff(stored[key], current[key], path, out);
    } else if (stored[key] != current[key]) {
      out.push_back(path);
    }
  }
}

}  // namespace

std::vector<std::string> config_diff(const nlohmann::json& stored,
                                     const nlohmann::json& current) {
  std::vector<std::string> out;
  collect_diff(stored, current, "", out);
  return out;
}

std::vector<DailyCrossSection> signal_cross_sections(
    const std::vector<DailySignal>& signals, const MarketDataset& dataset,
    const LabelMatrix& labels) {
  std::vector<DailyCrossSection> out;
  for (const auto& signal : signals) {
    const auto day = dataset.calendar().index_of(signal.date);
    if (!day || *day >= labels.n_days()) continue;
    DailyCrossSection cs;
    cs.date = signal.date;
    for (const auto& record : signal.records) {
      const auto stock = dataset.stock_index(record.stock);
      if (!stock) continue;
      const auto label = labels.get(*stock, *day);
      if (!label) continue;
      cs.signal.push_back(record.signal);
      cs.realized.push_back(*label);
    }
    if (!cs.signal.empty()) out.push_back(std::move(cs));
  }
  return out;
}

namespace {

struct DateRange {
  std::size_t first = 0;
  std::size_t last = 0;  // inclusive
};

DateRange resolve_range(const MarketDataset& dataset, const RunConfig& config) {
  const TradingCalendar& cal = dataset.calendar();
  if (cal.size() < 3) {
    throw ConfigError("dataset is too short to run (needs 3+ days)");
  }
  DateRange range;
  range.first = 0;
  // Default stop: the last day whose label can still settle inside the data.
  range.last = cal.size() - 3;
  if (!config.start_date.empty()) {
    const auto idx = cal.index_of(config.start_date);
    if (!idx) throw ConfigError("start_date is not a trading day: " + config.start_date);
    range.first = *idx;
  }
  if (!config.end_date.empty()) {
    const auto idx = cal.index_of(config.end_date);
    if (!idx) throw ConfigError("end_date is not a trading day: " + config.end_date);
    range.last = *idx;
  }
  if (range.last < range.first) {
    throw ConfigError("end_date precedes start_date");
  }
  return range;
}

// Selection fractions for past days, backed by the in-memory cache first and
// the on-disk decision cache second.
class FractionSource {
 public:
  FractionSource(const RunStore& store, const MarketDataset& dataset,
                 std::size_t n_type, std::size_t n_inv)
      : store_(store), dataset_(dataset), n_type_(n_type), n_inv_(n_inv) {}

  void put(const std::string& date, SelectionFractions fractions) {
    cache_[date] = std::move(fractions);
  }

  const SelectionFractions* get(const std::string& date) {
    auto it = cache_.find(date);
    if (it != cache_.end()) return &it->second;
    const auto path = store_.decisions_path(date);
    if (!std::filesystem::exists(path)) return nullptr;
    const auto records = read_decision_records(path);
    auto fractions =
        fractions_from_records(records, date, n_type_, n_inv_, dataset_);
    auto [inserted, _] = cache_.emplace(date, std::move(fractions));
    return &inserted->second;
  }

 private:
  const RunStore& store_;
  const MarketDataset& dataset_;
  std::size_t n_type_;
  std::size_t n_inv_;
  std::map<std::string, SelectionFractions> cache_;
};

// The trailing labeled days feeding Eq.-5-style optimization on day `day`:
// the most recent omega labeled days strictly before `day`, each with cached
// decisions. Returns fewer than omega days only during warm-up.
OptimizationWindow assemble_window(std::size_t day, std::size_t omega,
                                   const MarketDataset& dataset,
                                   const LabelMatrix& labels,
                                   FractionSource& fractions,
                                   std::size_t range_first) {
  OptimizationWindow window;
  if (day == 0) return window;
  std::vector<WindowDay> reversed;
  for (std::size_t t = day; t-- > range_first && reversed.size() < omega;) {
    if (t >= labels.n_days()) continue;
    const auto stocks = labels.labeled_stocks(t);
    if (stocks.empty()) continue;
    const std::string date = dataset.calendar().day(t);
    const SelectionFractions* day_fractions = fractions.get(date);
    if (!day_fractions) continue;
    WindowDay window_day;
    window_day.date = date;
    window_day.fractions = *day_fractions;
    for (std::size_t s : stocks) {
      window_day.labeled_stocks.push_back(s);
      window_day.labels.push_back(*labels.get(s, t));
    }
    reversed.push_back(std::move(window_day));
  }
  window.days.assign(reversed.rbegin(), reversed.rend());
  return window;
}

RunResult continue_run(const MarketDataset& dataset, const RunConfig& config,
                       const RunStore& store, DecisionProvider* provider_override,
                       const std::function<void(const DaySnapshot&)>& on_day) {
  RunResult result;
  result.store_root = store.root();
  const TradingCalendar& cal = dataset.calendar();
  const DateRange range = resolve_range(dataset, config);
  const double alpha = config.ablations.no_mdh ? 1.0 : config.alpha;
  const LabelMatrix labels = compute_labels(dataset);
  const std::size_t top_k = std::max<std::size_t>(
      1, static_cast<std::size_t>(std::llround(
             config.top_fraction * static_cast<double>(dataset.universe().size()))));

  // Provider per config unless the caller injected one.
  std::unique_ptr<DecisionProvider> owned_provider;
  DecisionProvider* provider = provider_override;
  if (!provider && config.provider == ProviderKind::deterministic) {
    DeterministicProviderConfig det;
    det.seed = config.seed;
    det.noise_scale = config.det_noise_scale;
    det.fixed_rationality = config.det_rationality;
    owned_provider = std::make_unique<DeterministicProvider>(det);
    provider = owned_provider.get();
  } else if (!provider && config.provider == ProviderKind::llm) {
    owned_provider = std::make_unique<LlmProvider>(config.llm);
    provider = owned_provider.get();
  }
  const bool replay = config.provider == ProviderKind::replay;
  if (!replay && !provider) {
    throw ConfigError("no provider available for this run");
  }

  // Resume point: the day after the last snapshot.
  const auto done = store.snapshot_dates();
  std::size_t start = range.first;
  TypeDistribution previous = TypeDistribution::uniform(config.n_type);
  if (!done.empty()) {
    const auto last_idx = cal.index_of(done.back());
    if (!last_idx) {
      throw ConfigError("stored snapshot date is not in the calendar: " + done.back());
    }
    start = *last_idx + 1;
    const auto snapshot = store.read_snapshot(done.back());
    previous = TypeDistribution(snapshot->distribution);
    store.truncate_signals_after(done.back());
    for (const auto& date : done) {
      result.completed_dates.push_back(date);
      if (store.read_snapshot(date)->failed) result.failed_dates.push_back(date);
    }
  } else {
    store.truncate_signals_after("");
  }
  if (start > range.last) {
    if (provider) result.provider_calls = provider->call_count();
    return result;  // already complete
  }

  // Population: rebuild deterministically or reload the persisted one.
  AgentPopulation population;
  if (!replay) {
    if (std::filesystem::exists(store.population_path())) {
      population = load_population(store.population_path());
      if (population.n_type() != config.n_type || population.n_inv != config.n_inv) {
        throw ConfigError("stored population does not match the configuration");
      }
    } else {
      PopulationConfig pop_config;
      pop_config.n_type = config.n_type;
      pop_config.n_inv = config.n_inv;
      pop_config.n_sel = config.n_sel;
      pop_config.seed = config.seed;
      pop_config.explicit_subsets = config.explicit_subsets;
      pop_config.blank_macro = config.ablations.no_pmd;
      population = build_population(dataset, pop_config, *provider,
                                    dataset.macro(range.first), &result.warnings);
      save_population(population, store.population_path());
    }
  }

  FractionSource fractions(store, dataset, config.n_type, config.n_inv);
  MacroDay blank_macro;
  blank_macro.narrative = kBlankMacroNarrative;

  // Current strategies: reload the newest persisted set at or before start.
  std::vector<DailyStrategy> strategies;
  if (!replay) {
    const auto strategy_dates = store.strategy_dates();
    for (auto it = strategy_dates.rbegin(); it != strategy_dates.rend(); ++it) {
      if (*it <= cal.day(start)) {
        if (auto loaded = store.read_strategies(*it)) strategies = *loaded;
        break;
      }
    }
  }

  for (std::size_t day = start; day <= range.last; ++day) {
    const std::string date = cal.day(day);
    DaySnapshot snapshot;
    snapshot.date = date;
    snapshot.decisions_ref = "decisions/" + date + ".jsonl";
    snapshot.signals_ref = "signals.csv#" + date;

    bool day_ok = true;
    SelectionFractions day_fractions;
    try {
      if (replay) {
        const auto path = store.decisions_path(date);
        if (!std::filesystem::exists(path)) {
          throw LoadError("replay run has no cached decisions for " + date);
        }
        day_fractions = fractions_from_records(read_decision_records(path), date,
                                               config.n_type, config.n_inv, dataset);
      } else {
        if (config.ablations.daily_pool_update) {
          redraw_pools(population, dataset, day, &result.warnings);
        }
        const MacroDay& macro =
            config.ablations.no_pmd ? blank_macro : dataset.macro(day);
        const bool refresh = strategies.empty() ||
                             config.ablations.daily_strategy_update ||
                             cal.is_week_start(day);
        if (refresh) {
          strategies = generate_strategies(population, macro, date, day, *provider,
                                           strategies.empty() ? nullptr : &strategies,
                                           dataset.schema(), &result.warnings);
          store.write_strategies(date, strategies);
        }
        auto matrix = execute_decisions(population, dataset, day, strategies,
                                        *provider, config.workers);
        result.abstentions += matrix.abstentions;
        write_decision_records(store.decisions_path(date), matrix.selections);
        day_fractions = std::move(matrix.fractions);
      }
    } catch (const std::exception& e) {
      day_ok = false;
      result.warnings.push_back(date + ": day failed: " + e.what());
    }

    if (!day_ok) {
      snapshot.failed = true;
      snapshot.distribution = previous.weights();
      store.write_snapshot(snapshot);
      result.failed_dates.push_back(date);
      result.completed_dates.push_back(date);
      if (on_day) on_day(snapshot);
      continue;
    }

    // Forward propagation: signal and portfolio for the day under d_{j-1}.
    const DailySignal signal =
        aggregate(day_fractions, previous, alpha, dataset.universe());
    store.append_signals(signal);
    fractions.put(date, std::move(day_fractions));
    const auto ranked = rank_stocks(signal);
    const auto portfolio = top_k_portfolio(ranked, std::min(top_k, ranked.size()));
    snapshot.portfolio_stocks = portfolio.stocks;
    snapshot.portfolio_weights = portfolio.weights;

    // Backward optimization produces d_j for tomorrow.
    TypeDistribution next = previous;
    if (config.ablations.no_bo) {
      next = TypeDistribution::uniform(config.n_type);
    } else {
      const OptimizationWindow window = assemble_window(
          day, config.omega_opt, dataset, labels, fractions, range.first);
      if (window.days.size() >= config.omega_opt) {
        AnnealConfig anneal = config.anneal;
        anneal.seed = mix_seed(config.anneal.seed ? config.anneal.seed : config.seed,
                               "anneal", day);
        const auto outcome = optimize_distribution(window, previous, anneal, alpha,
                                                   SimilarityMetric::rank_ic,
                                                   config.keep_trace);
        next = outcome.distribution;
        snapshot.objective = outcome.objective_value;
        snapshot.optimized = true;
        for (const auto& window_day : window.days) {
          snapshot.window_dates.push_back(window_day.date);
        }
        if (config.keep_trace) store.write_trace(date, outcome.trace);
      }
    }
    snapshot.distribution = next.weights();
    store.write_snapshot(snapshot);
    previous = next;
    result.completed_dates.push_back(date);
    if (on_day) on_day(snapshot);
  }

  if (provider) result.provider_calls = provider->call_count();
  nlohmann::json report;
  report["completed_days"] = result.completed_dates.size();
  report["failed_dates"] = result.failed_dates;
  report["warnings"] = result.warnings;
  report["provider_calls"] = result.provider_calls;
  report["abstentions"] = result.abstentions;
  store.write_report(report);
  return result;
}

}  // namespace

RunResult run_simulation(const MarketDataset& dataset, const RunConfig& config,
                         const std::filesystem::path& store_root,
                         DecisionProvider* provider_override,
                         const std::function<void(const DaySnapshot&)>& on_day) {
  RunStore store(store_root);
  store.initialize();
  const nlohmann::json current = run_config_to_json(config);
  if (store.has_config()) {
    const auto diff = config_diff(store.read_config(), current);
    if (!diff.empty()) {
      std::string keys;
      for (const auto& key : diff) {
        if (!keys.empty()) keys += ", ";
        keys += key;
      }
      throw ConfigError("store already holds a different run (changed: " + keys + ")");
    }
  } else {
    store.write_config(current);
  }
  return continue_run(dataset, config, store, provider_override, on_day);
}

RunResult resume_simulation(const MarketDataset& dataset, const RunConfig& config,
                            const std::filesystem::path& store_root,
                            DecisionProvider* provider_override,
                            const std::function<void(const DaySnapshot&)>& on_day) {
  RunStore store(store_root);
  if (!store.has_config()) {
    throw ConfigError("no run to resume at " + store_root.string());
  }
  const auto diff = config_diff(store.read_config(), run_config_to_json(config));
  if (!diff.empty()) {
    std::string keys;
    for (const auto& key : diff) {
      if (!keys.empty()) keys += ", ";
      keys += key;
    }
    throw ConfigError("resume refused; configuration changed: " + keys);
  }
  store.initialize();
  return continue_run(dataset, config, store, provider_override, on_day);
}

SweepReport scaling_sweep(const MarketDataset& dataset, const RunConfig& base,
                          const std::vector<std::pair<std::size_t, std::size_t>>& counts,
                          const std::filesystem::path& out_root) {
  for (std::size_t i = 1; i < counts.size(); ++i) {
    if (counts[i].first * counts[i].second <=
        counts[i - 1].first * counts[i - 1].second) {
      throw ConfigError("sweep counts must ascend in total agents");
    }
  }
  SweepReport report;
  const LabelMatrix labels = compute_labels(dataset);
  for (const auto& [n_type, n_inv] : counts) {
    SweepRow row;
    row.n_type = n_type;
    row.n_inv = n_inv;
    row.total_agents = n_type * n_inv;
    const auto store_root =
        out_root / ("sweep-" + std::to_string(row.total_agents));
    try {
      RunConfig config = base;
      config.n_type = n_type;
      config.n_inv = n_inv;
      config.seed = mix_seed(base.seed, "sweep", row.total_agents);
      config.anneal.seed = mix_seed(config.seed, "anneal-base");
      run_simulation(dataset, config, store_root);
      RunStore store(store_root);
      const auto sections =
          signal_cross_sections(store.read_signals(), dataset, labels);
      const auto factor = factor_report(sections);
      if (factor.mean_ric) {
        row.mean_ric = factor.mean_ric;
      } else {
        row.failed = true;
        row.error = "no usable daily cross-sections";
      }
    } catch (const std::exception& e) {
      row.failed = true;
      row.error = e.what();
    }
    report.rows.push_back(std::move(row));
  }
  return report;
}

}  // namespace mass
