#include <doctest.h>

#include <map>
#include <set>

#include "mass/decisions.hpp"
#include "mass/deterministic_provider.hpp"
#include "mass/population.hpp"
#include "support/synthetic.hpp"
#include "support/testutil.hpp"

using namespace mass;
using mass::testing::MarketSpec;
using mass::testing::TempDir;

namespace {

MarketDataset metadata_market(const TempDir& dir, int n_stocks = 40, int n_days = 6) {
  MarketSpec spec;
  spec.n_stocks = n_stocks;
  spec.n_days = n_days;
  spec.seed = 3;
  spec.with_metadata = true;
  spec.feature_columns = {"alpha", "beta", "gamma", "delta"};
  return mass::testing::make_market(spec, dir.path());
}

// Scripted provider for repair-path tests.
class ScriptedProvider : public DecisionProvider {
 public:
  std::vector<std::vector<std::string>> responses;
  mutable std::atomic<std::uint64_t> calls{0};

  std::string id() const override { return "scripted"; }
  AgentStyle generate_style(const StyleRequest&) override {
    calls++;
    return AgentStyle{};
  }
  std::string generate_strategy(const StrategyRequest& request) override {
    calls++;
    return "scripted strategy for " + request.date;
  }
  std::vector<std::string> select_stocks(const SelectionRequest&) override {
    const std::size_t i = calls++;
    if (responses.empty()) return {};
    return responses[std::min(i, responses.size() - 1)];
  }
  std::uint64_t call_count() const override { return calls.load(); }
};

}  // namespace

TEST_CASE("select_pool selectors") {
  TempDir dir("pool");
  const auto ds = metadata_market(dir);
  const auto& universe = ds.universe();

  SUBCASE("random pool of the full universe size is the universe") {
    PoolSelector sel;
    const auto pool = select_pool(sel, universe, ds, universe.size(), 1);
    CHECK(pool == universe);
  }
  SUBCASE("random pools are seeded draws without replacement") {
    PoolSelector sel;
    const auto a = select_pool(sel, universe, ds, 10, 42);
    const auto b = select_pool(sel, universe, ds, 10, 42);
    const auto c = select_pool(sel, universe, ds, 10, 43);
    CHECK(a == b);
    CHECK(a != c);
    CHECK(a.size() == 10);
    CHECK(std::set<std::string>(a.begin(), a.end()).size() == 10);
  }
  SUBCASE("industry-equal splits evenly: 4 industries x 10, n_sel 8 gives 2 each") {
    PoolSelector sel;
    sel.kind = PoolSelectorKind::industry_equal;
    const auto pool = select_pool(sel, universe, ds, 8, 7);
    REQUIRE(pool.size() == 8);
    std::map<std::string, int> per_industry;
    for (const auto& stock : pool) per_industry[ds.metadata(stock)->industry]++;
    REQUIRE(per_industry.size() == 4);
    for (const auto& [industry, count] : per_industry) CHECK(count == 2);
  }
  SUBCASE("mv-equal stratifies by cap quintile") {
    PoolSelector sel;
    sel.kind = PoolSelectorKind::mv_equal;
    const auto pool = select_pool(sel, universe, ds, 10, 9);
    REQUIRE(pool.size() == 10);
    // Fixture caps are 1e9 * (1 + index): quintiles are index ranges of 8.
    std::map<int, int> per_bucket;
    for (const auto& stock : pool) {
      const int index = std::stoi(stock) - 600000;
      per_bucket[index / 8]++;
    }
    for (const auto& [bucket, count] : per_bucket) CHECK(count == 2);
  }
  SUBCASE("industry basis falls back to random when too narrow") {
    PoolSelector sel;
    sel.kind = PoolSelectorKind::industry_basis;
    sel.industries = {"tech"};  // 10 stocks in fixture
    std::vector<std::string> warnings;
    const auto pool = select_pool(sel, universe, ds, 20, 5, nullptr, &warnings);
    CHECK(pool.size() == 20);
    REQUIRE_FALSE(warnings.empty());
    // Within-industry selection when the industry is wide enough.
    warnings.clear();
    const auto narrow = select_pool(sel, universe, ds, 5, 5, nullptr, &warnings);
    CHECK(warnings.empty());
    for (const auto& stock : narrow) {
      CHECK(ds.metadata(stock)->industry == "tech");
    }
  }
  SUBCASE("metadata-hungry selectors fail without metadata") {
    TempDir bare("bare");
    MarketSpec spec;
    spec.n_stocks = 10;
    spec.n_days = 4;
    const auto no_meta = mass::testing::make_market(spec, bare.path());
    PoolSelector sel;
    sel.kind = PoolSelectorKind::mv_equal;
    CHECK_THROWS_AS(select_pool(sel, no_meta.universe(), no_meta, 4, 1), ConfigError);
  }
}

TEST_CASE("build_population") {
  TempDir dir("pop");
  const auto ds = metadata_market(dir);
  DeterministicProvider provider({.seed = 11});

  PopulationConfig config;
  config.n_type = 4;
  config.n_inv = 8;
  config.n_sel = 10;
  config.seed = 11;

  const auto population = build_population(ds, config, provider, ds.macro(0));
  CHECK(population.n_type() == 4);
  CHECK(population.total_agents() == 32);
  for (const auto& type : population.types) {
    CHECK_FALSE(type.style.outline.empty());
    CHECK(type.style.rationality >= 0.0);
    CHECK(type.style.rationality <= 1.0);
    CHECK_FALSE(type.subset_columns.empty());
    REQUIRE(type.instances.size() == 8);
    for (const auto& instance : type.instances) {
      CHECK(instance.pool.size() == 10);
      for (const auto& stock : instance.pool) {
        CHECK(ds.stock_index(stock).has_value());
      }
    }
  }

  SUBCASE("same seed reproduces styles and pools exactly") {
    DeterministicProvider provider2({.seed = 11});
    const auto again = build_population(ds, config, provider2, ds.macro(0));
    for (std::size_t i = 0; i < population.n_type(); ++i) {
      CHECK(population.types[i].style.outline == again.types[i].style.outline);
      CHECK(population.types[i].subset_columns == again.types[i].subset_columns);
      for (std::size_t k = 0; k < config.n_inv; ++k) {
        CHECK(population.types[i].instances[k].pool ==
              again.types[i].instances[k].pool);
      }
    }
  }
  SUBCASE("degenerate 1x1 population") {
    PopulationConfig tiny;
    tiny.n_type = 1;
    tiny.n_inv = 1;
    tiny.n_sel = 5;
    tiny.seed = 2;
    const auto one = build_population(ds, tiny, provider, ds.macro(0));
    CHECK(one.total_agents() == 1);
  }
  SUBCASE("n_sel beyond the universe warns and uses everything") {
    PopulationConfig big = config;
    big.n_sel = 1000;
    std::vector<std::string> warnings;
    const auto pop = build_population(ds, big, provider, ds.macro(0), &warnings);
    CHECK(pop.types[0].instances[0].pool.size() == ds.universe().size());
    CHECK_FALSE(warnings.empty());
  }
  SUBCASE("explicit subsets are honored and validated") {
    PopulationConfig pinned = config;
    pinned.n_type = 2;
    pinned.explicit_subsets = {{std::vector<std::string>{"alpha"},
                                std::vector<std::string>{"beta", "gamma"}}};
    const auto pop = build_population(ds, pinned, provider, ds.macro(0));
    CHECK(pop.types[0].subset_columns == std::vector<std::string>{"alpha"});
    CHECK(pop.types[1].subset_columns ==
          std::vector<std::string>{"beta", "gamma"});
    pinned.explicit_subsets = {{std::vector<std::string>{"nope"},
                                std::vector<std::string>{"beta"}}};
    CHECK_THROWS_AS(build_population(ds, pinned, provider, ds.macro(0)), ConfigError);
  }
  SUBCASE("population round-trips through JSON") {
    TempDir out("popjson");
    save_population(population, out.path() / "population.json");
    const auto loaded = load_population(out.path() / "population.json");
    REQUIRE(loaded.n_type() == population.n_type());
    CHECK(loaded.n_inv == population.n_inv);
    for (std::size_t i = 0; i < population.n_type(); ++i) {
      CHECK(loaded.types[i].style.outline == population.types[i].style.outline);
      CHECK(loaded.types[i].style.rationality ==
            population.types[i].style.rationality);
      CHECK(loaded.types[i].subset_columns == population.types[i].subset_columns);
      for (std::size_t k = 0; k < population.n_inv; ++k) {
        CHECK(loaded.types[i].instances[k].pool ==
              population.types[i].instances[k].pool);
      }
    }
  }
}

TEST_CASE("generate_strategies and caching behaviour") {
  TempDir dir("strat");
  const auto ds = metadata_market(dir);
  DeterministicProvider provider({.seed = 4});
  PopulationConfig config{.n_type = 3, .n_inv = 2, .n_sel = 6, .seed = 4};
  const auto population = build_population(ds, config, provider, ds.macro(0));

  const auto strategies = generate_strategies(population, ds.macro(0),
                                              ds.calendar().day(0), 0, provider,
                                              nullptr, ds.schema());
  REQUIRE(strategies.size() == 3);
  for (const auto& s : strategies) CHECK_FALSE(s.text.empty());

  SUBCASE("deterministic provider reproduces strategy text") {
    DeterministicProvider provider2({.seed = 4});
    const auto again = generate_strategies(population, ds.macro(0),
                                           ds.calendar().day(0), 0, provider2,
                                           nullptr, ds.schema());
    for (std::size_t i = 0; i < strategies.size(); ++i) {
      CHECK(strategies[i].text == again[i].text);
    }
  }
  SUBCASE("provider failure falls back to the previous strategy") {
    class FailingProvider : public ScriptedProvider {
     public:
      std::string generate_strategy(const StrategyRequest&) override {
        throw ProviderError("unreachable endpoint");
      }
    } failing;
    std::vector<std::string> warnings;
    const auto reused = generate_strategies(population, ds.macro(1),
                                            ds.calendar().day(1), 1, failing,
                                            &strategies, ds.schema(), &warnings);
    REQUIRE(reused.size() == 3);
    CHECK(reused[0].text == strategies[0].text);
    CHECK(reused[0].date == ds.calendar().day(1));
    CHECK(warnings.size() == 3);
    // Without a previous strategy the failure propagates.
    CHECK_THROWS_AS(generate_strategies(population, ds.macro(0),
                                        ds.calendar().day(0), 0, failing, nullptr,
                                        ds.schema()),
                    ProviderError);
  }
}

TEST_CASE("execute_decisions") {
  TempDir dir("exec");
  const auto ds = metadata_market(dir, 30, 6);
  DeterministicProvider provider({.seed = 21});
  PopulationConfig config{.n_type = 4, .n_inv = 8, .n_sel = 10, .seed = 21};
  const auto population = build_population(ds, config, provider, ds.macro(0));
  const auto strategies = generate_strategies(population, ds.macro(0),
                                              ds.calendar().day(0), 0, provider,
                                              nullptr, ds.schema());

  const auto matrix = execute_decisions(population, ds, 0, strategies, provider);
  CHECK(matrix.fractions.n_type == 4);
  CHECK(matrix.fractions.n_stocks == 30);
  CHECK(matrix.selections.size() == 32);
  CHECK(matrix.abstentions == 0);

  SUBCASE("every selection is inside the instance pool, count = 20% of n_sel") {
    for (const auto& record : matrix.selections) {
      const auto& pool =
          population.types[record.type_index].instances[record.instance_index].pool;
      CHECK(record.selected.size() == selection_count(10));
      for (const auto& stock : record.selected) {
        CHECK(std::find(pool.begin(), pool.end(), stock) != pool.end());
      }
    }
  }
  SUBCASE("fractions match a recount of raw selections") {
    const auto rebuilt = fractions_from_records(matrix.selections, matrix.date, 4,
                                                8, ds);
    CHECK(rebuilt.values == matrix.fractions.values);
    // Row support: positive fractions only inside the union of type pools.
    for (std::size_t i = 0; i < 4; ++i) {
      std::set<std::string> support;
      for (const auto& instance : population.types[i].instances) {
        support.insert(instance.pool.begin(), instance.pool.end());
      }
      for (std::size_t s = 0; s < 30; ++s) {
        const double v = matrix.fractions.at(i, s);
        CHECK(v >= 0.0);
        CHECK(v <= 1.0);
        if (v > 0) CHECK(support.count(ds.universe()[s]) == 1);
      }
    }
  }
  SUBCASE("bit-identical across repeat runs and worker counts") {
    DeterministicProvider p2({.seed = 21});
    const auto again = execute_decisions(population, ds, 0, strategies, p2, 1);
    DeterministicProvider p4({.seed = 21});
    const auto threaded = execute_decisions(population, ds, 0, strategies, p4, 4);
    CHECK(again.fractions.values == matrix.fractions.values);
    CHECK(threaded.fractions.values == matrix.fractions.values);
    for (std::size_t r = 0; r < matrix.selections.size(); ++r) {
      CHECK(threaded.selections[r].selected == matrix.selections[r].selected);
    }
  }
  SUBCASE("unanimous and fractional columns") {
    // All instances of a type share the pool in this scripted setup.
    ScriptedProvider scripted;
    scripted.responses = {{population.types[0].instances[0].pool.front()}};
    PopulationConfig one{.n_type = 1, .n_inv = 4, .n_sel = 10, .seed = 21};
    DeterministicProvider builder({.seed = 21});
    auto pop1 = build_population(ds, one, builder, ds.macro(0));
    // Force a shared pool so the scripted single answer is legal everywhere.
    for (auto& instance : pop1.types[0].instances) {
      instance.pool = pop1.types[0].instances[0].pool;
    }
    const std::string target = pop1.types[0].instances[0].pool.front();
    scripted.responses = {{target}};
    std::vector<DailyStrategy> strat = {{0, ds.calendar().day(0), "s"}};
    // num_stocks = max(1, round(0.2*10)) = 2, so the scripted single-code
    // response is invalid; after retry it is repaired to the one legal code.
    const auto m = execute_decisions(pop1, ds, 0, strat, scripted);
    const auto si = *ds.stock_index(target);
    CHECK(m.fractions.at(0, si) == doctest::Approx(1.0));
  }
}

TEST_CASE("execute_decisions repair paths") {
  TempDir dir("repair");
  const auto ds = metadata_market(dir, 12, 5);
  DeterministicProvider builder({.seed = 31});
  PopulationConfig config{.n_type = 1, .n_inv = 1, .n_sel = 5, .seed = 31};
  auto population = build_population(ds, config, builder, ds.macro(0));
  const auto& pool = population.types[0].instances[0].pool;
  std::vector<DailyStrategy> strategies = {{0, ds.calendar().day(0), "s"}};
  const std::size_t want = selection_count(5);  // 1

  SUBCASE("code outside the pool is repaired to pool members") {
    ScriptedProvider scripted;
    scripted.responses = {{"999999"}, {"999999", pool[0]}};
    const auto m = execute_decisions(population, ds, 0, strategies, scripted);
    REQUIRE(m.selections[0].selected.size() == want);
    CHECK(m.selections[0].selected[0] == pool[0]);
    CHECK(m.abstentions == 0);
  }
  SUBCASE("wrong count triggers one retry then truncation in provider order") {
    ScriptedProvider scripted;
    scripted.responses = {{pool[0], pool[1]}, {pool[1], pool[0]}};
    const auto m = execute_decisions(population, ds, 0, strategies, scripted);
    CHECK(scripted.call_count() == 2);
    REQUIRE(m.selections[0].selected.size() == want);
    CHECK(m.selections[0].selected[0] == pool[1]);
  }
  SUBCASE("nothing legal after repair counts as abstention") {
    ScriptedProvider scripted;
    scripted.responses = {{"999999"}};
    const auto m = execute_decisions(population, ds, 0, strategies, scripted);
    CHECK(m.selections[0].selected.empty());
    CHECK(m.abstentions == 1);
    // The abstaining instance contributes zeros.
    for (std::size_t s = 0; s < m.fractions.n_stocks; ++s) {
      CHECK(m.fractions.at(0, s) == 0.0);
    }
  }
}

TEST_CASE("daily pool redraw changes pools deterministically") {
  TempDir dir("redraw");
  const auto ds = metadata_market(dir);
  DeterministicProvider provider({.seed = 8});
  PopulationConfig config{.n_type = 2, .n_inv = 3, .n_sel = 8, .seed = 8};
  auto population = build_population(ds, config, provider, ds.macro(0));
  const auto original = population.types[0].instances[0].pool;

  redraw_pools(population, ds, 1);
  const auto day1 = population.types[0].instances[0].pool;
  redraw_pools(population, ds, 2);
  redraw_pools(population, ds, 1);
  CHECK(population.types[0].instances[0].pool == day1);
  CHECK(day1 != original);
  CHECK(day1.size() == original.size());
}
