#pragma once

#include <filesystem>
#include <map>
#include <optional>
#include <stdexcept>
#include <string>
#include <unordered_map>
#include <vector>

#include "mass/calendar.hpp"

namespace mass {

// Fatal problem with the dataset on disk (missing file, calendar
// inconsistency, malformed schema).
class LoadError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Invalid configuration detected at build time (unknown feature column,
// missing selector metadata, bad config value).
class ConfigError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

enum class TextKind { news, report };

std::string to_string(TextKind kind);
std::optional<TextKind> parse_text_kind(const std::string& text);

struct TextItem {
  TextKind kind = TextKind::news;
  std::string title;
  std::string summary;
};

// Declares the expected feature columns and macro indicators, plus optional
// human-readable descriptions used in prompt rendering.
struct DatasetSchema {
  std::vector<std::string> feature_columns;
  std::vector<std::string> macro_indicators;
  std::map<std::string, std::string> descriptions;

  std::optional<std::size_t> feature_index(const std::string& name) const;
  std::string description_of(const std::string& name) const;
};

// Parses a key-value schema descriptor:
//   features = E/P, B/P, ...
//   macro_indicators = lpr_1y, cpi_yoy, ...
//   describe.E/P = earnings yield ...
DatasetSchema load_schema(const std::filesystem::path& path);

struct StockDay {
  std::string stock;
  std::string date;
  double open = 0, high = 0, low = 0, close = 0;
  double volume = 0, value = 0;
  std::optional<double> ref_price;  // mean trade price of the first 15 minutes
  bool limit_up = false;
  bool limit_down = false;
  // Aligned to DatasetSchema::feature_columns; nullopt marks a missing cell.
  std::vector<std::optional<double>> numeric;
  std::vector<TextItem> text_items;

  // Price at the execution window: ref_price when present, open otherwise.
  double exec_price() const { return ref_price ? *ref_price : open; }
};

struct MacroDay {
  std::string date;
  // Aligned to DatasetSchema::macro_indicators; forward-filled.
  std::vector<std::optional<double>> indicators;
  std::string narrative;
};

// Forward-return labels. The label for day j settles one day later: at the
// close of day j the freshest usable label is the one for day j-1.
class LabelMatrix {
 public:
  LabelMatrix() = default;
  LabelMatrix(std::size_t n_stocks, std::size_t n_days);

  void set(std::size_t stock_index, std::size_t day_index, double value);
  std::optional<double> get(std::size_t stock_index, std::size_t day_index) const;

  // Index of the latest day whose label is usable at the close of
  // `day_index`, or nullopt during the first day.
  std::optional<std::size_t> available_through(std::size_t day_index) const;

  std::size_t n_stocks() const { return n_stocks_; }
  std::size_t n_days() const { return n_days_; }
  std::size_t count() const { return count_; }

  // Stock indices that carry a label on `day_index`.
  std::vector<std::size_t> labeled_stocks(std::size_t day_index) const;

 private:
  std::size_t n_stocks_ = 0;
  std::size_t n_days_ = 0;
  std::size_t count_ = 0;
  std::vector<std::optional<double>> values_;
};

struct StockMeta {
  std::string industry;
  std::optional<double> market_cap;
};

struct LoadReport {
  std::vector<std::string> warnings;
  std::size_t missing_cells = 0;
  std::size_t skipped_rows = 0;
  std::size_t price_rows = 0;
  std::size_t feature_rows = 0;
  std::size_t news_rows = 0;
  std::size_t macro_rows = 0;

  void warn(std::string message) { warnings.push_back(std::move(message)); }
};

// Immutable after load; safe for unrestricted concurrent reads.
class MarketDataset {
 public:
  const TradingCalendar& calendar() const { return calendar_; }
  const DatasetSchema& schema() const { return schema_; }
  const std::vector<std::string>& universe() const { return universe_; }
  const LoadReport& load_report() const { return report_; }

  std::optional<std::size_t> stock_index(const std::string& stock) const;

  const StockDay* stock_day(std::size_t stock_index, std::size_t day_index) const;
  const StockDay* stock_day(const std::string& stock, const std::string& date) const;

  const MacroDay& macro(std::size_t day_index) const { return macro_.at(day_index); }

  // Benchmark index close per calendar day (nullopt when absent that day).
  std::optional<double> index_close(std::size_t day_index) const;

  bool has_metadata() const { return !meta_.empty(); }
  const StockMeta* metadata(const std::string& stock) const;

  friend MarketDataset load_dataset(const std::filesystem::path& root,
                                    const DatasetSchema& schema);

 private:
  TradingCalendar calendar_;
  DatasetSchema schema_;
  std::vector<std::string> universe_;
  std::unordered_map<std::string, std::size_t> stock_index_;
  std::vector<std::optional<StockDay>> days_;  // stock-major, |universe| x |calendar|
  std::vector<MacroDay> macro_;
  std::vector<std::optional<double>> index_close_;
  std::unordered_map<std::string, StockMeta> meta_;
  LoadReport report_;
};

// Loads prices.csv, features.csv, news.csv, macro.csv and index.csv from
// `root` (plus optional universe.csv metadata). Throws LoadError on a missing
// required file or a calendar inconsistency; recoverable problems are
// recorded in the load report.
MarketDataset load_dataset(const std::filesystem::path& root,
                           const DatasetSchema& schema);

// Writes a loaded dataset back out in the same file formats. Numeric fields
// use shortest round-trip formatting so load -> save -> load is bit-exact.
void save_dataset(const MarketDataset& dataset, const std::filesystem::path& root);

// Y[s, j] = exec(s, j+2) / exec(s, j+1) - 1: the one-day return of a position
// entered at the execution window of day j+1. Stocks missing either endpoint
// get no label. Fewer than 3 calendar days yields an empty matrix.
LabelMatrix compute_labels(const MarketDataset& dataset);

// A validated per-type view on the feature space: named numeric columns plus
// text kinds, resolved against the schema in schema order.
class FeatureSubset {
 public:
  FeatureSubset() = default;

  // Throws ConfigError on a column name missing from the schema.
  static FeatureSubset resolve(const DatasetSchema& schema,
                               const std::vector<std::string>& columns,
                               const std::vector<TextKind>& kinds);
  static FeatureSubset all_of(const DatasetSchema& schema);

  const std::vector<std::size_t>& column_indices() const { return columns_; }
  const std::vector<std::string>& column_names() const { return names_; }
  const std::vector<TextKind>& text_kinds() const { return kinds_; }
  bool includes_kind(TextKind kind) const;

 private:
  std::vector<std::size_t> columns_;  // ascending schema order
  std::vector<std::string> names_;
  std::vector<TextKind> kinds_;
};

struct FeatureView {
  // (column name, value) in schema order; nullopt marks a missing cell.
  std::vector<std::pair<std::string, std::optional<double>>> numeric;
  std::vector<TextItem> text_items;
};

// Projection of one (stock, date) row onto a subset. Returns an empty view
// when the stock has no row that day.
FeatureView visible_features(const MarketDataset& dataset, const FeatureSubset& subset,
                             const std::string& stock, const std::string& date);

// Shortest decimal representation that round-trips to the same double.
std::string format_double(double value);

// Missing markers accepted in input cells: "", "NA", "NaN", "nan", "null".
std::optional<double> parse_numeric_cell(const std::string& cell);

}  // namespace mass
