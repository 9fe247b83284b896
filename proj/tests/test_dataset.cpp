#include <doctest.h>

#include <cmath>

#include "mass/calendar.hpp"
#include "mass/csv.hpp"
#include "mass/dataset.hpp"
#include "support/synthetic.hpp"
#include "support/testutil.hpp"

using namespace mass;
using mass::testing::TempDir;
using mass::testing::write_file;

namespace {

// Minimal complete fixture: 2 stocks x 3 days.
void write_tiny_root(const std::filesystem::path& dir) {
  write_file(dir / "schema.txt",
             "features = E/P, B/P\nmacro_indicators = policy_rate, cpi_yoy\n"
             "describe.E/P = earnings yield\n");
  write_file(dir / "prices.csv",
             "date,stock,open,high,low,close,volume,value,ref_price,limit_up,limit_down\n"
             "2023-01-02,AAA,10,11,9,10.5,100,1000,10.1,0,0\n"
             "2023-01-02,BBB,20,22,19,21,200,4000,20.2,0,0\n"
             "2023-01-03,AAA,10.5,11,10,10.8,100,1000,10.6,0,0\n"
             "2023-01-03,BBB,21,23,20,22,200,4000,21.5,1,0\n"
             "2023-01-04,AAA,10.8,11.5,10.6,11,100,1000,10.9,0,0\n"
             "2023-01-04,BBB,22,24,21,23,200,4000,22.4,0,0\n");
  write_file(dir / "features.csv",
             "date,stock,E/P,B/P\n"
             "2023-01-02,AAA,0.05,0.3\n"
             "2023-01-02,BBB,0.08,0.6\n"
             "2023-01-03,AAA,0.06,0.31\n"
             "2023-01-03,BBB,bogus,0.61\n"
             "2023-01-04,AAA,0.07,0.32\n"
             "2023-01-04,BBB,0.09,0.62\n");
  write_file(dir / "news.csv",
             "date,stock,kind,title,summary\n"
             "2023-01-02,AAA,news,\"Earnings, beat\",Strong quarter\n"
             "2023-01-02,AAA,news,Guidance bump,Raised outlook\n"
             "2023-01-02,AAA,report,Q4 filing,Revenue up 12%\n");
  write_file(dir / "macro.csv",
             "date,indicator,value\n"
             "2023-01-02,policy_rate,3.45\n"
             "2023-01-03,cpi_yoy,-0.5\n");
  write_file(dir / "index.csv",
             "date,index_close\n"
             "2023-01-02,1000\n2023-01-03,1010\n2023-01-04,1005\n");
}

}  // namespace

TEST_CASE("iso week identifies Monday boundaries") {
  CHECK(iso_week("2023-01-02") == std::pair<int, int>{2023, 1});
  CHECK(iso_week("2023-01-08") == std::pair<int, int>{2023, 1});  // Sunday
  CHECK(iso_week("2023-01-09") == std::pair<int, int>{2023, 2});
  // Jan 1 2023 was a Sunday: ISO week 52 of 2022.
  CHECK(iso_week("2023-01-01") == std::pair<int, int>{2022, 52});
  CHECK(iso_week("2021-01-01") == std::pair<int, int>{2020, 53});
}

TEST_CASE("calendar rejects disorder and duplicates") {
  CHECK_THROWS_AS(TradingCalendar({"2023-01-03", "2023-01-02"}), std::invalid_argument);
  CHECK_THROWS_AS(TradingCalendar({"2023-01-02", "2023-01-02"}), std::invalid_argument);
  CHECK_THROWS_AS(TradingCalendar({"2023-13-02"}), std::invalid_argument);
  const TradingCalendar cal({"2023-01-05", "2023-01-06", "2023-01-09"});
  CHECK(cal.is_week_start(0));
  CHECK_FALSE(cal.is_week_start(1));
  CHECK(cal.is_week_start(2));
}

TEST_CASE("csv handles quoting") {
  const auto table = csv::parse("a,b\n\"x,y\",\"he said \"\"hi\"\"\"\nplain,2\n");
  REQUIRE(table.rows.size() == 2);
  CHECK(table.rows[0][0] == "x,y");
  CHECK(table.rows[0][1] == "he said \"hi\"");
  CHECK(csv::escape_field("x,y") == "\"x,y\"");
  CHECK(csv::escape_field("plain") == "plain");
}

TEST_CASE("load_dataset on a minimal complete fixture") {
  TempDir dir("dataset");
  write_tiny_root(dir.path());
  const auto schema = load_schema(dir.path() / "schema.txt");
  const auto ds = load_dataset(dir.path(), schema);

  CHECK(ds.calendar().size() == 3);
  CHECK(ds.universe().size() == 2);
  CHECK(ds.load_report().price_rows == 6);
  // The one malformed numeric cell is recorded as missing, not dropped.
  CHECK(ds.load_report().missing_cells == 1);
  const StockDay* bbb = ds.stock_day("BBB", "2023-01-03");
  REQUIRE(bbb != nullptr);
  CHECK_FALSE(bbb->numeric[0].has_value());
  CHECK(bbb->numeric[1] == doctest::Approx(0.61));
  CHECK(bbb->limit_up);

  // Macro forward-fill: cpi appears on day 2 only, policy_rate carries over.
  const MacroDay& m2 = ds.macro(2);
  CHECK(m2.indicators[0] == doctest::Approx(3.45));
  CHECK(m2.indicators[1] == doctest::Approx(-0.5));
  CHECK(m2.narrative ==
        "The latest policy_rate is 3.45. The latest cpi_yoy is -0.5.");
  const MacroDay& m0 = ds.macro(0);
  CHECK_FALSE(m0.indicators[1].has_value());
  CHECK(m0.narrative == "The latest policy_rate is 3.45.");
}

TEST_CASE("load_dataset fatal errors") {
  TempDir dir("dataset");
  write_tiny_root(dir.path());
  const auto schema = load_schema(dir.path() / "schema.txt");

  SUBCASE("missing prices file names it") {
    std::filesystem::remove(dir.path() / "prices.csv");
    CHECK_THROWS_WITH_AS(load_dataset(dir.path(), schema),
                         doctest::Contains("prices"), LoadError);
  }
  SUBCASE("date outside calendar is fatal") {
    write_file(dir.path() / "features.csv",
               "date,stock,E/P,B/P\n2023-02-01,AAA,0.05,0.3\n");
    CHECK_THROWS_AS(load_dataset(dir.path(), schema), LoadError);
  }
  SUBCASE("unknown stock in features is a warning plus skip") {
    write_file(dir.path() / "features.csv",
               "date,stock,E/P,B/P\n2023-01-02,ZZZ,0.05,0.3\n");
    const auto ds = load_dataset(dir.path(), schema);
    CHECK(ds.load_report().skipped_rows == 1);
    REQUIRE_FALSE(ds.load_report().warnings.empty());
  }
}

TEST_CASE("compute_labels matches the direct ratio") {
  TempDir dir("labels");
  write_tiny_root(dir.path());
  const auto ds = load_dataset(dir.path(), load_schema(dir.path() / "schema.txt"));
  const auto labels = compute_labels(ds);

  // Y[s, 0] = ref(day2) / ref(day1) - 1, from the fixture's ref prices.
  const auto a = labels.get(*ds.stock_index("AAA"), 0);
  REQUIRE(a.has_value());
  CHECK(*a == doctest::Approx(10.9 / 10.6 - 1.0).epsilon(1e-12));
  // Days 1 and 2 need rows beyond the calendar: no labels.
  CHECK_FALSE(labels.get(0, 1).has_value());
  CHECK_FALSE(labels.get(0, 2).has_value());
  // Availability: at the close of day j the freshest label is j-1's.
  CHECK_FALSE(labels.available_through(0).has_value());
  CHECK(labels.available_through(2) == 1);
}

TEST_CASE("compute_labels on a 5-day hand-built table") {
  TempDir dir("labels5");
  mass::testing::MarketSpec spec;
  spec.n_stocks = 3;
  spec.n_days = 5;
  spec.seed = 7;
  const auto ds = mass::testing::make_market(spec, dir.path());
  const auto labels = compute_labels(ds);

  // Independent oracle: recompute every label straight from exec prices.
  std::size_t found = 0;
  for (std::size_t s = 0; s < ds.universe().size(); ++s) {
    for (std::size_t j = 0; j + 2 < ds.calendar().size(); ++j) {
      const StockDay* entry = ds.stock_day(s, j + 1);
      const StockDay* exit = ds.stock_day(s, j + 2);
      REQUIRE(entry);
      REQUIRE(exit);
      const double expected = exit->exec_price() / entry->exec_price() - 1.0;
      const auto got = labels.get(s, j);
      REQUIRE(got.has_value());
      CHECK(std::abs(*got - expected) < 1e-12);
      found++;
    }
  }
  CHECK(found == 9);
  CHECK(labels.count() == 9);

  SUBCASE("delisted stock loses its labels") {
    // Rewrite prices without the final two days for stock 0.
    auto table = csv::read_file(dir.path() / "prices.csv");
    std::string out = csv::join_row(table.header);
    const auto code = mass::testing::stock_code(0);
    for (const auto& row : table.rows) {
      if (row[1] == code && row[0] >= ds.calendar().day(3)) continue;
      out += csv::join_row(row);
    }
    write_file(dir.path() / "prices.csv", out);
    const auto ds2 = load_dataset(dir.path(), ds.schema());
    const auto labels2 = compute_labels(ds2);
    const auto si = *ds2.stock_index(code);
    CHECK_FALSE(labels2.get(si, 2).has_value());  // needs day 4
    CHECK_FALSE(labels2.get(si, 1).has_value());  // needs day 3
    CHECK(labels2.get(si, 0).has_value());
  }
}

TEST_CASE("labels fall back to open when ref_price is absent") {
  TempDir dir("noref");
  mass::testing::MarketSpec spec;
  spec.n_stocks = 2;
  spec.n_days = 4;
  spec.with_ref_price = false;
  const auto ds = mass::testing::make_market(spec, dir.path());
  const auto labels = compute_labels(ds);
  const StockDay* entry = ds.stock_day(0, 1);
  const StockDay* exit = ds.stock_day(0, 2);
  REQUIRE_FALSE(entry->ref_price.has_value());
  const auto got = labels.get(0, 0);
  REQUIRE(got.has_value());
  CHECK(*got == doctest::Approx(exit->open / entry->open - 1.0).epsilon(1e-12));
}

TEST_CASE("fewer than 3 days yields an empty label matrix") {
  TempDir dir("short");
  mass::testing::MarketSpec spec;
  spec.n_stocks = 2;
  spec.n_days = 2;
  const auto ds = mass::testing::make_market(spec, dir.path());
  CHECK(compute_labels(ds).count() == 0);
}

TEST_CASE("visible_features projects columns and kinds") {
  TempDir dir("subset");
  write_tiny_root(dir.path());
  const auto schema = load_schema(dir.path() / "schema.txt");
  const auto ds = load_dataset(dir.path(), schema);

  SUBCASE("all columns equals the raw row") {
    const auto view = visible_features(ds, FeatureSubset::all_of(schema), "AAA",
                                       "2023-01-02");
    REQUIRE(view.numeric.size() == 2);
    CHECK(view.numeric[0].first == "E/P");
    CHECK(view.numeric[0].second == doctest::Approx(0.05));
    CHECK(view.numeric[1].second == doctest::Approx(0.3));
    CHECK(view.text_items.size() == 3);
  }
  SUBCASE("named projection") {
    const auto subset = FeatureSubset::resolve(schema, {"B/P", "E/P"}, {});
    const auto view = visible_features(ds, subset, "BBB", "2023-01-02");
    REQUIRE(view.numeric.size() == 2);
    // Schema order, not request order.
    CHECK(view.numeric[0].first == "E/P");
    CHECK(view.text_items.empty());
  }
  SUBCASE("news-only subset sees 2 text items and 0 numerics") {
    const auto subset = FeatureSubset::resolve(schema, {}, {TextKind::news});
    const auto view = visible_features(ds, subset, "AAA", "2023-01-02");
    CHECK(view.numeric.empty());
    CHECK(view.text_items.size() == 2);
  }
  SUBCASE("unknown column is a configuration error") {
    CHECK_THROWS_AS(FeatureSubset::resolve(schema, {"nope"}, {}), ConfigError);
  }
}

TEST_CASE("load -> save -> load round-trips numeric fields bit-exactly") {
  TempDir dir("round");
  mass::testing::MarketSpec spec;
  spec.n_stocks = 4;
  spec.n_days = 6;
  spec.seed = 99;
  spec.with_metadata = true;
  spec.feature_columns = {"alpha", "beta"};
  const auto ds = mass::testing::make_market(spec, dir.path());

  TempDir copy("roundcopy");
  save_dataset(ds, copy.path());
  const auto ds2 =
      load_dataset(copy.path(), load_schema(copy.path() / "schema.txt"));

  REQUIRE(ds2.calendar().days() == ds.calendar().days());
  REQUIRE(ds2.universe() == ds.universe());
  for (std::size_t s = 0; s < ds.universe().size(); ++s) {
    for (std::size_t d = 0; d < ds.calendar().size(); ++d) {
      const StockDay* lhs = ds.stock_day(s, d);
      const StockDay* rhs = ds2.stock_day(s, d);
      REQUIRE(lhs);
      REQUIRE(rhs);
      CHECK(lhs->open == rhs->open);
      CHECK(lhs->close == rhs->close);
      CHECK(lhs->ref_price == rhs->ref_price);
      CHECK(lhs->numeric == rhs->numeric);
    }
  }
}
