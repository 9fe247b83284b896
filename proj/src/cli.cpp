#include "mass/cli.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <iomanip>
#include <iostream>
#include <numeric>
#include <sstream>

#include <CLI11.hpp>
#include <json.hpp>

#include "mass/config_file.hpp"
#include "mass/csv.hpp"
#include "mass/engine.hpp"
#include "mass/population.hpp"
#include "mass/svg.hpp"

namespace mass {

namespace {

struct CommonFlags {
  std::string config_path;
  std::string out_dir;
  std::vector<std::string> overrides;
};

void add_common(CLI::App* cmd, CommonFlags& flags, bool config_required,
                bool out_required) {
  auto* config = cmd->add_option("--config", flags.config_path,
                                 "configuration file (sectioned key = value)");
  if (config_required) config->required();
  auto* out = cmd->add_option("--out", flags.out_dir, "output directory");
  if (out_required) out->required();
  cmd->add_option("--set", flags.overrides,
                  "override a config entry, e.g. --set run.alpha=0.3");
}

FileConfig load_file_config(const CommonFlags& flags) {
  FileConfig file = flags.config_path.empty()
                        ? FileConfig{}
                        : FileConfig::parse_file(flags.config_path);
  for (const auto& assignment : flags.overrides) file.set(assignment);
  return file;
}

MarketDataset load_dataset_for(const RunConfig& config) {
  const std::filesystem::path root = config.dataset_path;
  const std::filesystem::path schema_path =
      config.schema_path.empty() ? root / "schema.txt"
                                 : std::filesystem::path(config.schema_path);
  return load_dataset(root, load_schema(schema_path));
}

std::string fmt2(double value) {
  std::ostringstream out;
  out << std::fixed << std::setprecision(2) << value;
  return out.str();
}

void print_day(std::ostream& out, const DaySnapshot& snapshot) {
  out << snapshot.date;
  if (snapshot.failed) {
    out << "  FAILED\n";
    return;
  }
  out << "  objective=" << (snapshot.optimized ? fmt2(snapshot.objective * 100.0)
                                               : std::string("--"));
  // Largest distribution entries, type index : weight.
  std::vector<std::size_t> order(snapshot.distribution.size());
  std::iota(order.begin(), order.end(), 0);
  std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
    return snapshot.distribution[a] > snapshot.distribution[b];
  });
  out << "  d=[";
  const std::size_t shown = std::min<std::size_t>(5, order.size());
  for (std::size_t i = 0; i < shown; ++i) {
    if (i) out << ' ';
    out << order[i] << ':' << fmt2(snapshot.distribution[order[i]]);
  }
  if (order.size() > shown) out << " ...";
  out << "]\n";
}

int report_run_result(std::ostream& out, const RunResult& result) {
  out << "completed " << result.completed_dates.size() << " day(s), "
      << result.failed_dates.size() << " failed, provider calls "
      << result.provider_calls << ", abstentions " << result.abstentions << "\n";
  for (const auto& warning : result.warnings) out << "warning: " << warning << "\n";
  return result.failed_dates.empty() ? 0 : 2;
}

int cmd_run(const CommonFlags& flags, std::ostream& out, bool resume) {
  RunConfig config;
  RunStore store(flags.out_dir);
  if (resume && flags.config_path.empty()) {
    if (!flags.overrides.empty()) {
      throw ConfigError("resume does not take --set; start a new run instead");
    }
    config = run_config_from_json(store.read_config());
  } else {
    config = run_config_from_file(load_file_config(flags));
  }
  const MarketDataset dataset = load_dataset_for(config);
  const auto on_day = [&](const DaySnapshot& snapshot) { print_day(out, snapshot); };
  const RunResult result =
      resume ? resume_simulation(dataset, config, flags.out_dir, nullptr, on_day)
             : run_simulation(dataset, config, flags.out_dir, nullptr, on_day);
  return report_run_result(out, result);
}

// Shared by report/backtest: a store that must already hold signals.
std::vector<DailySignal> require_signals(const RunStore& store) {
  if (!std::filesystem::exists(store.signals_path())) {
    throw LoadError("store is missing signals.csv: " + store.root().string());
  }
  auto signals = store.read_signals();
  if (signals.empty()) {
    throw LoadError("store has an empty signals.csv: " + store.root().string());
  }
  return signals;
}

RunConfig config_from_store(const RunStore& store, const CommonFlags& flags) {
  if (!flags.config_path.empty()) {
    return run_config_from_file(load_file_config(flags));
  }
  if (!store.has_config()) {
    throw LoadError("store is missing config.json: " + store.root().string());
  }
  return run_config_from_json(store.read_config());
}

int cmd_backtest(const CommonFlags& flags, std::ostream& out) {
  RunStore store(flags.out_dir);
  const auto signals = require_signals(store);
  const RunConfig run_config = config_from_store(store, flags);
  const BacktestConfig config = backtest_config_from_file(load_file_config(flags));
  const MarketDataset dataset = load_dataset_for(run_config);

  const BacktestResult result =
      run_backtest(signals, dataset, benchmark_series(dataset), config);

  const auto dir = store.root() / "backtest";
  std::filesystem::create_directories(dir);
  {
    std::ofstream curves(dir / "curves.csv");
    curves << "date,equity,benchmark,excess\n";
    for (std::size_t i = 0; i < result.dates.size(); ++i) {
      curves << result.dates[i] << ',' << format_double(result.equity[i]) << ','
             << format_double(result.benchmark[i]) << ','
             << format_double(result.excess[i]) << '\n';
    }
  }
  {
    std::ofstream trades(dir / "trades.jsonl");
    for (const auto& trade : result.trades) {
      nlohmann::json j;
      j["date"] = trade.date;
      j["stock"] = trade.stock;
      j["action"] = trade.action;
      j["weight_change"] = trade.weight_change;
      j["cost"] = trade.cost;
      trades << j.dump() << '\n';
    }
  }
  {
    nlohmann::json summary;
    if (result.summary.annualized_return) {
      summary["annualized_return"] = *result.summary.annualized_return;
    }
    if (result.summary.sharpe) summary["sharpe"] = *result.summary.sharpe;
    summary["max_drawdown"] = result.summary.max_drawdown;
    if (result.summary.excess_annualized_return) {
      summary["excess_annualized_return"] = *result.summary.excess_annualized_return;
    }
    summary["terminal_equity"] = result.summary.terminal_equity;
    summary["terminal_excess"] = result.summary.terminal_excess;
    summary["events"] = result.events;
    std::ofstream file(dir / "summary.json");
    file << summary.dump(2) << '\n';
  }

  out << "backtest over " << result.dates.size() << " day(s), "
      << result.trades.size() << " trade(s)\n";
  if (result.summary.annualized_return) {
    out << "AR      " << fmt2(*result.summary.annualized_return * 100.0) << "\n";
  }
  if (result.summary.sharpe) {
    out << "Sharpe  " << fmt2(*result.summary.sharpe) << "\n";
  }
  out << "MDD     " << fmt2(result.summary.max_drawdown * 100.0) << "\n";
  if (result.summary.excess_annualized_return) {
    out << "ExcessAR " << fmt2(*result.summary.excess_annualized_return * 100.0)
        << "\n";
  }
  return 0;
}

int cmd_report(const CommonFlags& flags, std::ostream& out) {
  RunStore store(flags.out_dir);
  const auto signals = require_signals(store);
  const RunConfig run_config = config_from_store(store, flags);
  const MarketDataset dataset = load_dataset_for(run_config);
  const LabelMatrix labels = compute_labels(dataset);

  const auto sections = signal_cross_sections(signals, dataset, labels);
  const FactorReport factor = factor_report(sections);

  const auto dir = store.root() / "report";
  std::filesystem::create_directories(dir);
  {
    std::ofstream daily(dir / "factor_daily.csv");
    daily << "date,ic,ric\n";
    for (std::size_t i = 0; i < factor.dates.size(); ++i) {
      daily << factor.dates[i] << ',' << format_double(factor.ic_series[i]) << ','
            << format_double(factor.ric_series[i]) << '\n';
    }
  }
  {
    std::ofstream summary(dir / "summary.jsonl");
    const auto emit = [&](const std::string& metric, std::optional<double> value) {
      if (!value) return;
      nlohmann::json j;
      j["metric"] = metric;
      j["value"] = *value;
      j["units"] = "correlation";
      summary << j.dump() << '\n';
    };
    emit("mean_ic", factor.mean_ic);
    emit("mean_ric", factor.mean_ric);
    emit("icir", factor.icir);
    emit("ricir", factor.ricir);
    nlohmann::json skipped;
    skipped["metric"] = "skipped_days";
    skipped["value"] = factor.skipped_days;
    skipped["units"] = "days";
    summary << skipped.dump() << '\n';
  }

  // Distribution-over-time stacked series plus its plot.
  const auto snapshot_dates = store.snapshot_dates();
  std::vector<ChartSeries> type_series;
  {
    std::ofstream dist(dir / "distribution.csv");
    dist << "date";
    std::size_t n_type = 0;
    for (const auto& date : snapshot_dates) {
      const auto snapshot = store.read_snapshot(date);
      n_type = std::max(n_type, snapshot->distribution.size());
    }
    for (std::size_t i = 0; i < n_type; ++i) dist << ",type_" << i;
    dist << '\n';
    type_series.resize(n_type);
    for (std::size_t i = 0; i < n_type; ++i) {
      type_series[i].label = "type " + std::to_string(i);
    }
    for (const auto& date : snapshot_dates) {
      const auto snapshot = store.read_snapshot(date);
      dist << date;
      for (std::size_t i = 0; i < n_type; ++i) {
        const double w =
            i < snapshot->distribution.size() ? snapshot->distribution[i] : 0.0;
        dist << ',' << format_double(w);
        type_series[i].values.push_back(w);
      }
      dist << '\n';
    }
  }
  {
    std::ofstream svg(dir / "distribution.svg");
    svg << render_stacked_area("agent type distribution", type_series);
  }
  // IC series plot.
  {
    std::ofstream svg(dir / "factor.svg");
    svg << render_line_chart("daily IC / RIC",
                             {{"ic", factor.ic_series}, {"ric", factor.ric_series}});
  }
  // Equity plots when a backtest has run.
  const auto curves_path = store.root() / "backtest" / "curves.csv";
  if (std::filesystem::exists(curves_path)) {
    const auto table = csv::read_file(curves_path);
    ChartSeries equity{"equity", {}};
    ChartSeries bench{"benchmark", {}};
    ChartSeries excess{"excess", {}};
    for (const auto& row : table.rows) {
      if (row.size() < 4) continue;
      equity.values.push_back(parse_numeric_cell(row[1]).value_or(1.0));
      bench.values.push_back(parse_numeric_cell(row[2]).value_or(1.0));
      excess.values.push_back(parse_numeric_cell(row[3]).value_or(1.0));
    }
    std::ofstream eq_svg(store.root() / "report" / "equity.svg");
    eq_svg << render_line_chart("equity vs benchmark", {equity, bench});
    std::ofstream ex_svg(store.root() / "report" / "excess.svg");
    ex_svg << render_line_chart("excess cumulative return", {excess});
  }

  // Rendered table, percentage points.
  out << "factor metrics over " << factor.ic_series.size() << " day(s) ("
      << factor.skipped_days << " skipped)\n";
  if (factor.empty()) {
    out << "no usable cross-sections\n";
    return 0;
  }
  out << "RIC    " << fmt2(*factor.mean_ric * 100.0) << "\n";
  if (factor.ricir) out << "RICIR  " << fmt2(*factor.ricir * 100.0) << "\n";
  out << "IC     " << fmt2(*factor.mean_ic * 100.0) << "\n";
  if (factor.icir) out << "ICIR   " << fmt2(*factor.icir * 100.0) << "\n";

  // Backtest summary when present.
  const auto summary_path = store.root() / "backtest" / "summary.json";
  if (std::filesystem::exists(summary_path)) {
    std::ifstream in(summary_path);
    const nlohmann::json summary = nlohmann::json::parse(in);
    out << "backtest: ";
    if (summary.contains("annualized_return")) {
      out << "AR " << fmt2(summary["annualized_return"].get<double>() * 100.0) << "  ";
    }
    if (summary.contains("sharpe")) {
      out << "Sharpe " << fmt2(summary["sharpe"].get<double>()) << "  ";
    }
    out << "MDD " << fmt2(summary["max_drawdown"].get<double>() * 100.0) << "\n";
  }
  return 0;
}

int cmd_sweep(const CommonFlags& flags, const std::string& counts_flag,
              std::ostream& out) {
  const FileConfig file = load_file_config(flags);
  RunConfig base = run_config_from_file(file);
  const MarketDataset dataset = load_dataset_for(base);

  std::vector<std::pair<std::size_t, std::size_t>> counts;
  std::istringstream in(counts_flag);
  std::string item;
  while (std::getline(in, item, ',')) {
    std::size_t total = 0;
    try {
      std::size_t used = 0;
      total = std::stoull(item, &used);
      if (used != item.size() || total == 0) throw std::invalid_argument(item);
    } catch (...) {
      throw ConfigError("malformed agent count: '" + item + "'");
    }
    std::size_t n_type = std::min<std::size_t>(base.n_type, total);
    if (total % n_type != 0) {
      throw ConfigError("agent count " + std::to_string(total) +
                        " is not divisible by n_type " + std::to_string(n_type));
    }
    counts.emplace_back(n_type, total / n_type);
  }
  if (counts.empty()) throw ConfigError("no agent counts given");

  const SweepReport report = scaling_sweep(dataset, base, counts, flags.out_dir);

  std::filesystem::create_directories(flags.out_dir);
  std::ofstream csv_out(std::filesystem::path(flags.out_dir) / "sweep_report.csv");
  csv_out << "n_type,n_inv,total_agents,mean_ric\n";
  ChartSeries ric_series{"mean RIC", {}};
  out << "agents  mean_RIC\n";
  for (const auto& row : report.rows) {
    csv_out << row.n_type << ',' << row.n_inv << ',' << row.total_agents << ','
            << (row.mean_ric ? format_double(*row.mean_ric) : std::string("NA"))
            << '\n';
    out << std::setw(6) << row.total_agents << "  "
        << (row.mean_ric ? fmt2(*row.mean_ric * 100.0) : "failed: " + row.error)
        << "\n";
    if (row.mean_ric) ric_series.values.push_back(*row.mean_ric);
  }
  std::ofstream svg(std::filesystem::path(flags.out_dir) / "sweep_ric.svg");
  svg << render_line_chart("mean RIC vs agent count", {ric_series});

  for (const auto& row : report.rows) {
    if (row.failed) return 2;
  }
  return 0;
}

int cmd_validate(const CommonFlags& flags, std::ostream& out) {
  const FileConfig file = load_file_config(flags);
  const auto root = dataset_root_from_file(file);
  const auto schema = load_schema(schema_path_from_file(file, root));
  const MarketDataset dataset = load_dataset(root, schema);
  const LabelMatrix labels = compute_labels(dataset);

  const LoadReport& report = dataset.load_report();
  out << "calendar days      " << dataset.calendar().size() << "\n"
      << "stocks             " << dataset.universe().size() << "\n"
      << "feature columns    " << schema.feature_columns.size() << "\n"
      << "price rows         " << report.price_rows << "\n"
      << "feature rows       " << report.feature_rows << "\n"
      << "text items         " << report.news_rows << "\n"
      << "macro rows         " << report.macro_rows << "\n"
      << "missing cells      " << report.missing_cells << "\n"
      << "skipped rows       " << report.skipped_rows << "\n"
      << "labels             " << labels.count() << "\n";
  for (const auto& warning : report.warnings) out << "warning: " << warning << "\n";
  return 0;
}

}  // namespace

int run_cli(const std::vector<std::string>& args, std::ostream& out,
            std::ostream& err) {
  CLI::App app{"multi-agent market simulation and portfolio construction engine"};
  app.require_subcommand(1);

  CommonFlags run_flags, resume_flags, backtest_flags, report_flags, sweep_flags,
      validate_flags;
  std::string counts_flag = "16,32,64,128,256,512";

  auto* run_cmd = app.add_subcommand("run", "run a simulation into a store");
  add_common(run_cmd, run_flags, true, true);
  auto* resume_cmd =
      app.add_subcommand("resume", "continue an interrupted run from its store");
  add_common(resume_cmd, resume_flags, false, true);
  auto* backtest_cmd = app.add_subcommand(
      "backtest", "run the index-enhancement backtest over stored signals");
  add_common(backtest_cmd, backtest_flags, false, true);
  auto* report_cmd =
      app.add_subcommand("report", "factor metrics, plots and summaries");
  add_common(report_cmd, report_flags, false, true);
  auto* sweep_cmd =
      app.add_subcommand("sweep", "agent-count scaling sweep (one run per count)");
  add_common(sweep_cmd, sweep_flags, true, true);
  sweep_cmd->add_option("--counts", counts_flag,
                        "comma-separated total agent counts");
  auto* validate_cmd =
      app.add_subcommand("validate-data", "load a dataset and print its report");
  add_common(validate_cmd, validate_flags, true, false);

  std::vector<std::string> reversed(args.rbegin(), args.rend());
  try {
    app.parse(reversed);
  } catch (const CLI::ParseError& e) {
    std::ostringstream unused;
    const int code = app.exit(e, out, err);
    return code == 0 ? 0 : 1;
  }

  try {
    if (run_cmd->parsed()) return cmd_run(run_flags, out, false);
    if (resume_cmd->parsed()) return cmd_run(resume_flags, out, true);
    if (backtest_cmd->parsed()) return cmd_backtest(backtest_flags, out);
    if (report_cmd->parsed()) return cmd_report(report_flags, out);
    if (sweep_cmd->parsed()) return cmd_sweep(sweep_flags, counts_flag, out);
    if (validate_cmd->parsed()) return cmd_validate(validate_flags, out);
  } catch (const ConfigError& e) {
    err << "error: " << e.what() << "\n";
    return 1;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << "\n";
    return 2;
  }
  return 1;
}

}  // namespace mass
