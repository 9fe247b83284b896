#include "mass/population.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <map>
#include <numeric>
#include <random>
#include <set>

#include <json.hpp>

#include "mass/rng.hpp"

namespace mass {

const char* const kBlankMacroNarrative =
    "No macroeconomic information is available for this period.";

FeatureSubset AgentPopulation::subset_of(const DatasetSchema& schema,
                                         std::size_t type_index) const {
  const AgentType& type = types.at(type_index);
  return FeatureSubset::resolve(schema, type.subset_columns, type.subset_kinds);
}

std::vector<FeatureDesc> feature_descriptions(const DatasetSchema& schema,
                                              const std::vector<std::string>& columns) {
  std::vector<FeatureDesc> out;
  out.reserve(columns.size());
  for (const auto& name : columns) {
    out.push_back(FeatureDesc{name, schema.description_of(name)});
  }
  return out;
}

std::vector<std::string> known_industries(const MarketDataset& dataset) {
  std::set<std::string> found;
  for (const auto& stock : dataset.universe()) {
    const StockMeta* meta = dataset.metadata(stock);
    if (meta && !meta->industry.empty()) found.insert(meta->industry);
  }
  return {found.begin(), found.end()};
}

namespace {

std::vector<std::string> sample_without_replacement(std::vector<std::string> items,
                                                    std::size_t count,
                                                    std::mt19937_64& rng) {
  std::shuffle(items.begin(), items.end(), rng);
  items.resize(std::min(count, items.size()));
  std::sort(items.begin(), items.end());
  return items;
}

std::map<std::string, std::vector<std::string>> group_by_industry(
    const std::vector<std::string>& universe, const MarketDataset& dataset) {
  std::map<std::string, std::vector<std::string>> groups;
  for (const auto& stock : universe) {
    const StockMeta* meta = dataset.metadata(stock);
    if (!meta || meta->industry.empty()) {
      throw ConfigError("stock '" + stock + "' has no industry metadata");
    }
    groups[meta->industry].push_back(stock);
  }
  return groups;
}

}  // namespace

std::vector<std::string> select_pool(const PoolSelector& selector,
                                     const std::vector<std::string>& universe,
                                     const MarketDataset& dataset, std::size_t n_sel,
                                     std::uint64_t seed, bool* clamped,
                                     std::vector<std::string>* warnings) {
  if (clamped) *clamped = false;
  if (n_sel >= universe.size()) {
    if (clamped) *clamped = true;
    if (warnings && n_sel > universe.size()) {
      warnings->push_back("pool size exceeds universe; using the full universe");
    }
    std::vector<std::string> all = universe;
    std::sort(all.begin(), all.end());
    return all;
  }
  auto rng = make_rng(seed);

  switch (selector.kind) {
    case PoolSelectorKind::random:
      return sample_without_replacement(universe, n_sel, rng);

    case PoolSelectorKind::industry_equal: {
      auto groups = group_by_industry(universe, dataset);
      std::vector<std::string> industries;
      for (const auto& [name, members] : groups) industries.push_back(name);
      std::shuffle(industries.begin(), industries.end(), rng);
      for (auto& [name, members] : groups) {
        std::shuffle(members.begin(), members.end(), rng);
      }
      // Round-robin one stock per industry until the pool is full.
      std::vector<std::string> pool;
      std::size_t offset = 0;
      while (pool.size() < n_sel) {
        bool took_any = false;
        for (const auto& name : industries) {
          const auto& members = groups[name];
          if (offset < members.size()) {
            pool.push_back(members[offset]);
            took_any = true;
            if (pool.size() == n_sel) break;
          }
        }
        if (!took_any) break;
        ++offset;
      }
      std::sort(pool.begin(), pool.end());
      return pool;
    }

    case PoolSelectorKind::mv_equal: {
      std::vector<std::pair<double, std::string>> by_cap;
      for (const auto& stock : universe) {
        const StockMeta* meta = dataset.metadata(stock);
        if (!meta || !meta->market_cap) {
          throw ConfigError("stock '" + stock + "' has no market-cap metadata");
        }
        by_cap.emplace_back(*meta->market_cap, stock);
      }
      std::sort(by_cap.begin(), by_cap.end());
      // Quintile buckets, equal allocation, remainder to the largest caps.
      const std::size_t n_buckets = 5;
      std::vector<std::vector<std::string>> buckets(n_buckets);
      for (std::size_t i = 0; i < by_cap.size(); ++i) {
        buckets[i * n_buckets / by_cap.size()].push_back(by_cap[i].second);
      }
      std::vector<std::size_t> quota(n_buckets, n_sel / n_buckets);
      for (std::size_t r = 0; r < n_sel % n_buckets; ++r) {
        quota[n_buckets - 1 - r]++;
      }
      std::vector<std::string> pool;
      std::size_t shortfall = 0;
      for (std::size_t b = 0; b < n_buckets; ++b) {
        auto taken = sample_without_replacement(buckets[b], quota[b], rng);
        shortfall += quota[b] - taken.size();
        pool.insert(pool.end(), taken.begin(), taken.end());
      }
      // Refill any shortfall from the largest buckets downward.
      for (std::size_t b = n_buckets; b-- > 0 && shortfall > 0;) {
        std::vector<std::string> rest;
        for (const auto& stock : buckets[b]) {
          if (!std::binary_search(pool.begin(), pool.end(), stock)) {
            rest.push_back(stock);
          }
        }
        auto extra = sample_without_replacement(rest, shortfall, rng);
        shortfall -= extra.size();
        pool.insert(pool.end(), extra.begin(), extra.end());
        std::sort(pool.begin(), pool.end());
      }
      std::sort(pool.begin(), pool.end());
      return pool;
    }

    case PoolSelectorKind::industry_basis: {
      auto groups = group_by_industry(universe, dataset);
      std::vector<std::string> candidates;
      for (const auto& industry : selector.industries) {
        auto it = groups.find(industry);
        if (it != groups.end()) {
          candidates.insert(candidates.end(), it->second.begin(), it->second.end());
        }
      }
      if (candidates.size() < n_sel) {
        if (warnings) {
          warnings->push_back(
              "preferred industries hold fewer stocks than the pool size; "
              "falling back to a random pool");
        }
        return sample_without_replacement(universe, n_sel, rng);
      }
      return sample_without_replacement(candidates, n_sel, rng);
    }
  }
  return sample_without_replacement(universe, n_sel, rng);
}

namespace {

std::vector<std::string> draw_subset_columns(const DatasetSchema& schema,
                                             std::mt19937_64& rng) {
  const std::size_t n = schema.feature_columns.size();
  std::uniform_real_distribution<double> fraction(0.25, 0.75);
  const std::size_t size = std::clamp<std::size_t>(
      static_cast<std::size_t>(std::lround(fraction(rng) * static_cast<double>(n))),
      1, n);
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), 0);
  std::shuffle(order.begin(), order.end(), rng);
  order.resize(size);
  std::sort(order.begin(), order.end());
  std::vector<std::string> out;
  for (std::size_t idx : order) out.push_back(schema.feature_columns[idx]);
  return out;
}

}  // namespace

AgentPopulation build_population(const MarketDataset& dataset,
                                 const PopulationConfig& config,
                                 DecisionProvider& provider, const MacroDay& macro,
                                 std::vector<std::string>* warnings) {
  if (config.n_type < 1 || config.n_inv < 1 || config.n_sel < 1) {
    throw ConfigError("population requires n_type, n_inv and n_sel >= 1");
  }
  if (config.explicit_subsets &&
      config.explicit_subsets->size() != config.n_type) {
    throw ConfigError("explicit feature subsets must cover every agent type");
  }

  AgentPopulation population;
  population.n_inv = config.n_inv;
  population.n_sel = config.n_sel;
  population.seed = config.seed;
  const auto industries = known_industries(dataset);
  const std::string narrative =
      config.blank_macro ? kBlankMacroNarrative : macro.narrative;

  for (std::size_t i = 0; i < config.n_type; ++i) {
    AgentType type;
    type.index = i;

    if (config.explicit_subsets) {
      type.subset_columns = (*config.explicit_subsets)[i];
      type.subset_kinds = {TextKind::news, TextKind::report};
    } else {
      auto rng = make_rng(mix_seed(config.seed, "subset", i));
      type.subset_columns = draw_subset_columns(dataset.schema(), rng);
      std::bernoulli_distribution coin(0.5);
      if (coin(rng)) type.subset_kinds.push_back(TextKind::news);
      if (coin(rng)) type.subset_kinds.push_back(TextKind::report);
    }
    // Validates the column names against the schema.
    FeatureSubset::resolve(dataset.schema(), type.subset_columns, type.subset_kinds);

    StyleRequest request;
    request.type_index = i;
    request.macro_narrative = narrative;
    request.features = feature_descriptions(dataset.schema(), type.subset_columns);
    request.metadata_available = dataset.has_metadata();
    request.industries = industries;
    request.seed = mix_seed(config.seed, "style", i);
    type.style = provider.generate_style(request);

    for (std::size_t k = 0; k < config.n_inv; ++k) {
      AgentInstance instance;
      instance.type_index = i;
      instance.instance_index = k;
      instance.rng_seed = mix_seed(config.seed, i, k);
      bool clamped = false;
      instance.pool = select_pool(type.style.pool_selector, dataset.universe(),
                                  dataset, config.n_sel,
                                  mix_seed(instance.rng_seed, "pool"), &clamped,
                                  warnings);
      type.instances.push_back(std::move(instance));
    }
    population.types.push_back(std::move(type));
  }
  return population;
}

void redraw_pools(AgentPopulation& population, const MarketDataset& dataset,
                  std::size_t day_index, std::vector<std::string>* warnings) {
  for (auto& type : population.types) {
    for (auto& instance : type.instances) {
      instance.pool = select_pool(
          type.style.pool_selector, dataset.universe(), dataset, population.n_sel,
          mix_seed(mix_seed(instance.rng_seed, "pool"), day_index), nullptr,
          warnings);
    }
  }
}

void save_population(const AgentPopulation& population,
                     const std::filesystem::path& path) {
  nlohmann::json j;
  j["n_inv"] = population.n_inv;
  j["n_sel"] = population.n_sel;
  j["seed"] = population.seed;
  nlohmann::json types = nlohmann::json::array();
  for (const auto& type : population.types) {
    nlohmann::json t;
    t["index"] = type.index;
    t["style"] = style_to_json(type.style);
    t["subset_columns"] = type.subset_columns;
    std::vector<std::string> kinds;
    for (TextKind kind : type.subset_kinds) kinds.push_back(to_string(kind));
    t["subset_kinds"] = kinds;
    nlohmann::json instances = nlohmann::json::array();
    for (const auto& instance : type.instances) {
      instances.push_back({{"instance_index", instance.instance_index},
                           {"pool", instance.pool},
                           {"rng_seed", instance.rng_seed}});
    }
    t["instances"] = instances;
    types.push_back(t);
  }
  j["types"] = types;
  std::ofstream out(path);
  out << j.dump(2) << '\n';
}

AgentPopulation load_population(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in.is_open()) {
    throw LoadError("cannot open population file: " + path.string());
  }
  nlohmann::json j = nlohmann::json::parse(in);
  AgentPopulation population;
  population.n_inv = j.at("n_inv").get<std::size_t>();
  population.n_sel = j.at("n_sel").get<std::size_t>();
  population.seed = j.at("seed").get<std::uint64_t>();
  for (const auto& t : j.at("types")) {
    AgentType type;
    type.index = t.at("index").get<std::size_t>();
    type.style = style_from_json(t.at("style"));
    type.subset_columns = t.at("subset_columns").get<std::vector<std::string>>();
    for (const auto& kind : t.at("subset_kinds")) {
      if (auto parsed = parse_text_kind(kind.get<std::string>())) {
        type.subset_kinds.push_back(*parsed);
      }
    }
    for (const auto& inst : t.at("instances")) {
      AgentInstance instance;
      instance.type_index = type.index;
      instance.instance_index = inst.at("instance_index").get<std::size_t>();
      instance.pool = inst.at("pool").get<std::vector<std::string>>();
      instance.rng_seed = inst.at("rng_seed").get<std::uint64_t>();
      type.instances.push_back(std::move(instance));
    }
    population.types.push_back(std::move(type));
  }
  return population;
}

}  // namespace mass
