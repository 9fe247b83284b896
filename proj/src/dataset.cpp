#include "mass/dataset.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <set>
#include <sstream>

#include "mass/csv.hpp"

namespace mass {

std::string to_string(TextKind kind) {
  return kind == TextKind::news ? "news" : "report";
}

std::optional<TextKind> parse_text_kind(const std::string& text) {
  if (text == "news") return TextKind::news;
  if (text == "report") return TextKind::report;
  return std::nullopt;
}

std::string format_double(double value) {
  char buf[32];
  auto [ptr, ec] = std::to_chars(buf, buf + sizeof(buf), value);
  if (ec != std::errc()) return "0";
  return std::string(buf, ptr);
}

std::optional<double> parse_numeric_cell(const std::string& cell) {
  if (cell.empty() || cell == "NA" || cell == "NaN" || cell == "nan" ||
      cell == "null") {
    return std::nullopt;
  }
  const char* begin = cell.data();
  const char* end = begin + cell.size();
  while (begin < end && (*begin == ' ' || *begin == '\t')) ++begin;
  while (end > begin && (*(end - 1) == ' ' || *(end - 1) == '\t')) --end;
  double value = 0;
  auto [ptr, ec] = std::from_chars(begin, end, value);
  if (ec != std::errc() || ptr != end) return std::nullopt;
  if (!std::isfinite(value)) return std::nullopt;
  return value;
}

std::optional<std::size_t> DatasetSchema::feature_index(const std::string& name) const {
  for (std::size_t i = 0; i < feature_columns.size(); ++i) {
    if (feature_columns[i] == name) return i;
  }
  return std::nullopt;
}

std::string DatasetSchema::description_of(const std::string& name) const {
  auto it = descriptions.find(name);
  return it != descriptions.end() ? it->second : name;
}

namespace {

std::string trim(const std::string& s) {
  std::size_t b = s.find_first_not_of(" \t\r\n");
  if (b == std::string::npos) return "";
  std::size_t e = s.find_last_not_of(" \t\r\n");
  return s.substr(b, e - b + 1);
}

std::vector<std::string> split_list(const std::string& value) {
  std::vector<std::string> out;
  std::string item;
  std::istringstream in(value);
  while (std::getline(in, item, ',')) {
    item = trim(item);
    if (!item.empty()) out.push_back(item);
  }
  return out;
}

}  // namespace

DatasetSchema load_schema(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in.is_open()) {
    throw LoadError("missing schema descriptor: " + path.string());
  }
  DatasetSchema schema;
  std::string line;
  while (std::getline(in, line)) {
    line = trim(line);
    if (line.empty() || line[0] == '#') continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos) {
      throw LoadError("schema line is not key = value: " + line);
    }
    const std::string key = trim(line.substr(0, eq));
    const std::string value = trim(line.substr(eq + 1));
    if (key == "features") {
      schema.feature_columns = split_list(value);
    } else if (key == "macro_indicators") {
      schema.macro_indicators = split_list(value);
    } else if (key.rfind("describe.", 0) == 0) {
      schema.descriptions[key.substr(9)] = value;
    } else {
      throw LoadError("unknown schema key: " + key);
    }
  }
  if (schema.feature_columns.empty()) {
    throw LoadError("schema declares no feature columns: " + path.string());
  }
  std::set<std::string> seen(schema.feature_columns.begin(),
                             schema.feature_columns.end());
  if (seen.size() != schema.feature_columns.size()) {
    throw LoadError("schema feature columns contain duplicates");
  }
  return schema;
}

std::optional<std::size_t> MarketDataset::stock_index(const std::string& stock) const {
  auto it = stock_index_.find(stock);
  if (it == stock_index_.end()) return std::nullopt;
  return it->second;
}

const StockDay* MarketDataset::stock_day(std::size_t stock_index,
                                         std::size_t day_index) const {
  const auto& slot = days_.at(stock_index * calendar_.size() + day_index);
  return slot ? &*slot : nullptr;
}

const StockDay* MarketDataset::stock_day(const std::string& stock,
                                         const std::string& date) const {
  const auto si = stock_index(stock);
  const auto di = calendar_.index_of(date);
  if (!si || !di) return nullptr;
  return stock_day(*si, *di);
}

std::optional<double> MarketDataset::index_close(std::size_t day_index) const {
  return index_close_.at(day_index);
}

const StockMeta* MarketDataset::metadata(const std::string& stock) const {
  auto it = meta_.find(stock);
  return it != meta_.end() ? &it->second : nullptr;
}

namespace {

double require_price(const std::string& cell, const std::string& what,
                     const std::string& where) {
  const auto value = parse_numeric_cell(cell);
  if (!value || *value <= 0) {
    throw std::invalid_argument(what + " not a positive number at " + where);
  }
  return *value;
}

std::size_t require_column(const csv::Table& table, const std::string& name,
                           const std::string& file) {
  const auto idx = table.column(name);
  if (!idx) throw LoadError(file + " is missing column '" + name + "'");
  return *idx;
}

csv::Table read_required(const std::filesystem::path& root, const std::string& name) {
  const auto path = root / (name + ".csv");
  if (!std::filesystem::exists(path)) {
    throw LoadError("missing required file '" + name + "': " + path.string());
  }
  return csv::read_file(path);
}

}  // namespace

MarketDataset load_dataset(const std::filesystem::path& root,
                           const DatasetSchema& schema) {
  MarketDataset ds;
  ds.schema_ = schema;

  csv::Table prices = read_required(root, "prices");
  csv::Table features = read_required(root, "features");
  csv::Table news = read_required(root, "news");
  csv::Table macro = read_required(root, "macro");
  csv::Table index = read_required(root, "index");

  const std::size_t p_date = require_column(prices, "date", "prices.csv");
  const std::size_t p_stock = require_column(prices, "stock", "prices.csv");
  const std::size_t p_open = require_column(prices, "open", "prices.csv");
  const std::size_t p_high = require_column(prices, "high", "prices.csv");
  const std::size_t p_low = require_column(prices, "low", "prices.csv");
  const std::size_t p_close = require_column(prices, "close", "prices.csv");
  const std::size_t p_volume = require_column(prices, "volume", "prices.csv");
  const std::size_t p_value = require_column(prices, "value", "prices.csv");
  const std::optional<std::size_t> p_ref = prices.column("ref_price");
  const std::size_t p_lu = require_column(prices, "limit_up", "prices.csv");
  const std::size_t p_ld = require_column(prices, "limit_down", "prices.csv");

  // Calendar and universe come from the prices table.
  std::set<std::string> dates;
  std::set<std::string> stocks;
  for (const auto& row : prices.rows) {
    if (row.size() <= std::max({p_date, p_stock, p_ld})) {
      throw LoadError("prices.csv row has too few fields");
    }
    if (!is_iso_date(row[p_date])) {
      throw LoadError("prices.csv has a malformed date: " + row[p_date]);
    }
    dates.insert(row[p_date]);
    stocks.insert(row[p_stock]);
  }
  ds.calendar_ = TradingCalendar(
      std::vector<std::string>(dates.begin(), dates.end()));
  ds.universe_.assign(stocks.begin(), stocks.end());
  for (std::size_t i = 0; i < ds.universe_.size(); ++i) {
    ds.stock_index_.emplace(ds.universe_[i], i);
  }
  const std::size_t n_days = ds.calendar_.size();
  ds.days_.assign(ds.universe_.size() * n_days, std::nullopt);
  ds.index_close_.assign(n_days, std::nullopt);

  for (const auto& row : prices.rows) {
    const std::size_t si = ds.stock_index_.at(row[p_stock]);
    const std::size_t di = *ds.calendar_.index_of(row[p_date]);
    StockDay day;
    day.stock = row[p_stock];
    day.date = row[p_date];
    const std::string where = row[p_stock] + "@" + row[p_date];
    try {
      day.open = require_price(row[p_open], "open", where);
      day.high = require_price(row[p_high], "high", where);
      day.low = require_price(row[p_low], "low", where);
      day.close = require_price(row[p_close], "close", where);
    } catch (const std::invalid_argument& e) {
      ds.report_.warn(std::string("prices: ") + e.what() + "; row skipped");
      ds.report_.skipped_rows++;
      continue;
    }
    day.volume = parse_numeric_cell(row[p_volume]).value_or(0.0);
    day.value = parse_numeric_cell(row[p_value]).value_or(0.0);
    if (p_ref && *p_ref < row.size()) {
      const auto ref = parse_numeric_cell(row[*p_ref]);
      if (ref && *ref > 0) day.ref_price = ref;
    }
    day.limit_up = row[p_lu] == "1";
    day.limit_down = row[p_ld] == "1";
    if (day.limit_up && day.limit_down) {
      ds.report_.warn("prices: limit_up and limit_down both set at " + where +
                      "; row skipped");
      ds.report_.skipped_rows++;
      continue;
    }
    const double body_lo = std::min(day.open, day.close);
    const double body_hi = std::max(day.open, day.close);
    if (day.low > body_lo || body_hi > day.high) {
      ds.report_.warn("prices: OHLC ordering violated at " + where + "; row skipped");
      ds.report_.skipped_rows++;
      continue;
    }
    day.numeric.assign(schema.feature_columns.size(), std::nullopt);
    ds.days_[si * n_days + di] = std::move(day);
    ds.report_.price_rows++;
  }

  // Numeric features: one column per schema feature, by name.
  const std::size_t f_date = require_column(features, "date", "features.csv");
  const std::size_t f_stock = require_column(features, "stock", "features.csv");
  std::vector<std::optional<std::size_t>> f_cols;
  f_cols.reserve(schema.feature_columns.size());
  for (const auto& name : schema.feature_columns) {
    const auto idx = features.column(name);
    if (!idx) {
      throw LoadError("features.csv is missing schema column '" + name + "'");
    }
    f_cols.push_back(idx);
  }
  std::size_t unknown_stock_rows = 0;
  for (const auto& row : features.rows) {
    if (row.size() <= std::max(f_date, f_stock)) {
      throw LoadError("features.csv row has too few fields");
    }
    const auto di = ds.calendar_.index_of(row[f_date]);
    if (!di) {
      throw LoadError("features.csv references a date outside the calendar: " +
                      row[f_date]);
    }
    const auto si = ds.stock_index(row[f_stock]);
    if (!si) {
      unknown_stock_rows++;
      ds.report_.skipped_rows++;
      continue;
    }
    auto& slot = ds.days_[*si * n_days + *di];
    if (!slot) {
      // Feature row for a stock with no price row that day.
      ds.report_.skipped_rows++;
      continue;
    }
    for (std::size_t c = 0; c < f_cols.size(); ++c) {
      const std::size_t col = *f_cols[c];
      std::optional<double> value;
      if (col < row.size()) value = parse_numeric_cell(row[col]);
      if (!value) ds.report_.missing_cells++;
      slot->numeric[c] = value;
    }
    ds.report_.feature_rows++;
  }
  if (unknown_stock_rows > 0) {
    ds.report_.warn("features: " + std::to_string(unknown_stock_rows) +
                    " row(s) referenced unknown stocks; skipped");
  }

  // Text items.
  const std::size_t n_date = require_column(news, "date", "news.csv");
  const std::size_t n_stock = require_column(news, "stock", "news.csv");
  const std::size_t n_kind = require_column(news, "kind", "news.csv");
  const std::size_t n_title = require_column(news, "title", "news.csv");
  const std::size_t n_summary = require_column(news, "summary", "news.csv");
  std::size_t unknown_news = 0;
  for (const auto& row : news.rows) {
    if (row.size() <= std::max({n_date, n_stock, n_kind, n_title, n_summary})) {
      ds.report_.skipped_rows++;
      continue;
    }
    const auto di = ds.calendar_.index_of(row[n_date]);
    if (!di) {
      throw LoadError("news.csv references a date outside the calendar: " +
                      row[n_date]);
    }
    const auto si = ds.stock_index(row[n_stock]);
    const auto kind = parse_text_kind(row[n_kind]);
    if (!si || !kind) {
      unknown_news++;
      ds.report_.skipped_rows++;
      continue;
    }
    auto& slot = ds.days_[*si * n_days + *di];
    if (!slot) {
      ds.report_.skipped_rows++;
      continue;
    }
    slot->text_items.push_back(TextItem{*kind, row[n_title], row[n_summary]});
    ds.report_.news_rows++;
  }
  if (unknown_news > 0) {
    ds.report_.warn("news: " + std::to_string(unknown_news) +
                    " row(s) had unknown stock or kind; skipped");
  }

  // Macro indicators, forward-filled onto the trading calendar.
  const std::size_t m_date = require_column(macro, "date", "macro.csv");
  const std::size_t m_ind = require_column(macro, "indicator", "macro.csv");
  const std::size_t m_val = require_column(macro, "value", "macro.csv");
  std::vector<std::vector<std::optional<double>>> macro_raw(
      n_days, std::vector<std::optional<double>>(schema.macro_indicators.size(),
                                                 std::nullopt));
  std::size_t unknown_indicators = 0;
  for (const auto& row : macro.rows) {
    if (row.size() <= std::max({m_date, m_ind, m_val})) {
      ds.report_.skipped_rows++;
      continue;
    }
    const auto di = ds.calendar_.index_of(row[m_date]);
    if (!di) {
      throw LoadError("macro.csv references a date outside the calendar: " +
                      row[m_date]);
    }
    std::optional<std::size_t> ii;
    for (std::size_t i = 0; i < schema.macro_indicators.size(); ++i) {
      if (schema.macro_indicators[i] == row[m_ind]) {
        ii = i;
        break;
      }
    }
    if (!ii) {
      unknown_indicators++;
      ds.report_.skipped_rows++;
      continue;
    }
    macro_raw[*di][*ii] = parse_numeric_cell(row[m_val]);
    ds.report_.macro_rows++;
  }
  if (unknown_indicators > 0) {
    ds.report_.warn("macro: " + std::to_string(unknown_indicators) +
                    " row(s) referenced indicators outside the schema; skipped");
  }
  ds.macro_.resize(n_days);
  std::vector<std::optional<double>> carried(schema.macro_indicators.size(),
                                             std::nullopt);
  for (std::size_t d = 0; d < n_days; ++d) {
    for (std::size_t i = 0; i < carried.size(); ++i) {
      if (macro_raw[d][i]) carried[i] = macro_raw[d][i];
    }
    MacroDay day;
    day.date = ds.calendar_.day(d);
    day.indicators = carried;
    std::ostringstream narrative;
    for (std::size_t i = 0; i < carried.size(); ++i) {
      if (!carried[i]) continue;
      if (narrative.tellp() > 0) narrative << ' ';
      narrative << "The latest " << schema.macro_indicators[i] << " is "
                << format_double(*carried[i]) << ".";
    }
    day.narrative = narrative.str();
    ds.macro_[d] = std::move(day);
  }

  // Benchmark index.
  const std::size_t i_date = require_column(index, "date", "index.csv");
  const std::size_t i_close = require_column(index, "index_close", "index.csv");
  for (const auto& row : index.rows) {
    if (row.size() <= std::max(i_date, i_close)) {
      ds.report_.skipped_rows++;
      continue;
    }
    const auto di = ds.calendar_.index_of(row[i_date]);
    if (!di) {
      throw LoadError("index.csv references a date outside the calendar: " +
                      row[i_date]);
    }
    const auto close = parse_numeric_cell(row[i_close]);
    if (close && *close > 0) ds.index_close_[*di] = close;
  }

  // Optional per-stock metadata used by pool selectors.
  const auto meta_path = root / "universe.csv";
  if (std::filesystem::exists(meta_path)) {
    csv::Table meta = csv::read_file(meta_path);
    const std::size_t u_stock = require_column(meta, "stock", "universe.csv");
    const auto u_industry = meta.column("industry");
    const auto u_cap = meta.column("market_cap");
    for (const auto& row : meta.rows) {
      if (row.size() <= u_stock) continue;
      StockMeta sm;
      if (u_industry && *u_industry < row.size()) sm.industry = row[*u_industry];
      if (u_cap && *u_cap < row.size()) sm.market_cap = parse_numeric_cell(row[*u_cap]);
      ds.meta_[row[u_stock]] = std::move(sm);
    }
  }

  return ds;
}

LabelMatrix::LabelMatrix(std::size_t n_stocks, std::size_t n_days)
    : n_stocks_(n_stocks),
      n_days_(n_days),
      values_(n_stocks * n_days, std::nullopt) {}

void LabelMatrix::set(std::size_t stock_index, std::size_t day_index, double value) {
  auto& slot = values_.at(stock_index * n_days_ + day_index);
  if (!slot) count_++;
  slot = value;
}

std::optional<double> LabelMatrix::get(std::size_t stock_index,
                                       std::size_t day_index) const {
  if (stock_index >= n_stocks_ || day_index >= n_days_) return std::nullopt;
  return values_[stock_index * n_days_ + day_index];
}

std::optional<std::size_t> LabelMatrix::available_through(
    std::size_t day_index) const {
  if (day_index == 0) return std::nullopt;
  return day_index - 1;
}

std::vector<std::size_t> LabelMatrix::labeled_stocks(std::size_t day_index) const {
  std::vector<std::size_t> out;
  for (std::size_t s = 0; s < n_stocks_; ++s) {
    if (values_[s * n_days_ + day_index]) out.push_back(s);
  }
  return out;
}

LabelMatrix compute_labels(const MarketDataset& dataset) {
  const std::size_t n_days = dataset.calendar().size();
  const std::size_t n_stocks = dataset.universe().size();
  if (n_days < 3) return LabelMatrix(n_stocks, 0);
  LabelMatrix labels(n_stocks, n_days);
  for (std::size_t s = 0; s < n_stocks; ++s) {
    for (std::size_t j = 0; j + 2 < n_days; ++j) {
      const StockDay* entry = dataset.stock_day(s, j + 1);
      const StockDay* exit = dataset.stock_day(s, j + 2);
      if (!entry || !exit) continue;
      const double p0 = entry->exec_price();
      const double p1 = exit->exec_price();
      if (p0 <= 0 || p1 <= 0) continue;
      labels.set(s, j, p1 / p0 - 1.0);
    }
  }
  return labels;
}

FeatureSubset FeatureSubset::resolve(const DatasetSchema& schema,
                                     const std::vector<std::string>& columns,
                                     const std::vector<TextKind>& kinds) {
  FeatureSubset subset;
  for (const auto& name : columns) {
    const auto idx = schema.feature_index(name);
    if (!idx) throw ConfigError("unknown feature column in subset: " + name);
    subset.columns_.push_back(*idx);
  }
  std::sort(subset.columns_.begin(), subset.columns_.end());
  subset.columns_.erase(
      std::unique(subset.columns_.begin(), subset.columns_.end()),
      subset.columns_.end());
  for (std::size_t idx : subset.columns_) {
    subset.names_.push_back(schema.feature_columns[idx]);
  }
  subset.kinds_ = kinds;
  std::sort(subset.kinds_.begin(), subset.kinds_.end());
  subset.kinds_.erase(std::unique(subset.kinds_.begin(), subset.kinds_.end()),
                      subset.kinds_.end());
  return subset;
}

FeatureSubset FeatureSubset::all_of(const DatasetSchema& schema) {
  return resolve(schema, schema.feature_columns,
                 {TextKind::news, TextKind::report});
}

bool FeatureSubset::includes_kind(TextKind kind) const {
  return std::find(kinds_.begin(), kinds_.end(), kind) != kinds_.end();
}

FeatureView visible_features(const MarketDataset& dataset, const FeatureSubset& subset,
                             const std::string& stock, const std::string& date) {
  FeatureView view;
  const StockDay* day = dataset.stock_day(stock, date);
  if (!day) return view;
  for (std::size_t i = 0; i < subset.column_indices().size(); ++i) {
    const std::size_t col = subset.column_indices()[i];
    view.numeric.emplace_back(subset.column_names()[i], day->numeric.at(col));
  }
  for (const auto& item : day->text_items) {
    if (subset.includes_kind(item.kind)) view.text_items.push_back(item);
  }
  return view;
}

void save_dataset(const MarketDataset& dataset, const std::filesystem::path& root) {
  namespace fs = std::filesystem;
  fs::create_directories(root);
  const auto& cal = dataset.calendar();
  const auto& schema = dataset.schema();

  std::ofstream prices(root / "prices.csv");
  prices << "date,stock,open,high,low,close,volume,value,ref_price,limit_up,limit_down\n";
  std::ofstream features(root / "features.csv");
  features << "date,stock";
  for (const auto& name : schema.feature_columns) features << ',' << csv::escape_field(name);
  features << '\n';
  std::ofstream news(root / "news.csv");
  news << "date,stock,kind,title,summary\n";
  for (std::size_t d = 0; d < cal.size(); ++d) {
    for (std::size_t s = 0; s < dataset.universe().size(); ++s) {
      const StockDay* day = dataset.stock_day(s, d);
      if (!day) continue;
      prices << day->date << ',' << csv::escape_field(day->stock) << ','
             << format_double(day->open) << ',' << format_double(day->high) << ','
             << format_double(day->low) << ',' << format_double(day->close) << ','
             << format_double(day->volume) << ',' << format_double(day->value) << ','
             << (day->ref_price ? format_double(*day->ref_price) : std::string())
             << ',' << (day->limit_up ? '1' : '0') << ','
             << (day->limit_down ? '1' : '0') << '\n';
      features << day->date << ',' << csv::escape_field(day->stock);
      for (const auto& cell : day->numeric) {
        features << ',' << (cell ? format_double(*cell) : std::string("NA"));
      }
      features << '\n';
      for (const auto& item : day->text_items) {
        news << day->date << ',' << csv::escape_field(day->stock) << ','
             << to_string(item.kind) << ',' << csv::escape_field(item.title) << ','
             << csv::escape_field(item.summary) << '\n';
      }
    }
  }

  std::ofstream macro(root / "macro.csv");
  macro << "date,indicator,value\n";
  // Emit the forward-filled value only on days where it changes.
  std::vector<std::optional<double>> last(schema.macro_indicators.size(),
                                          std::nullopt);
  for (std::size_t d = 0; d < cal.size(); ++d) {
    const MacroDay& day = dataset.macro(d);
    for (std::size_t i = 0; i < schema.macro_indicators.size(); ++i) {
      if (day.indicators[i] && day.indicators[i] != last[i]) {
        macro << day.date << ',' << csv::escape_field(schema.macro_indicators[i])
              << ',' << format_double(*day.indicators[i]) << '\n';
        last[i] = day.indicators[i];
      }
    }
  }

  std::ofstream index(root / "index.csv");
  index << "date,index_close\n";
  for (std::size_t d = 0; d < cal.size(); ++d) {
    if (const auto close = dataset.index_close(d)) {
      index << cal.day(d) << ',' << format_double(*close) << '\n';
    }
  }

  if (dataset.has_metadata()) {
    std::ofstream meta(root / "universe.csv");
    meta << "stock,industry,market_cap\n";
    for (const auto& stock : dataset.universe()) {
      const StockMeta* sm = dataset.metadata(stock);
      if (!sm) continue;
      meta << csv::escape_field(stock) << ',' << csv::escape_field(sm->industry)
           << ',' << (sm->market_cap ? format_double(*sm->market_cap) : std::string())
           << '\n';
    }
  }

  std::ofstream schema_out(root / "schema.txt");
  schema_out << "features = ";
  for (std::size_t i = 0; i < schema.feature_columns.size(); ++i) {
    if (i > 0) schema_out << ", ";
    schema_out << schema.feature_columns[i];
  }
  schema_out << "\nmacro_indicators = ";
  for (std::size_t i = 0; i < schema.macro_indicators.size(); ++i) {
    if (i > 0) schema_out << ", ";
    schema_out << schema.macro_indicators[i];
  }
  schema_out << '\n';
  for (const auto& [name, text] : schema.descriptions) {
    schema_out << "describe." << name << " = " << text << '\n';
  }
}

}  // namespace mass
