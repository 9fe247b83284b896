#include "mass/config_file.hpp"

#include <algorithm>
#include <charconv>
#include <cstdlib>
#include <fstream>
#include <sstream>

namespace mass {

namespace {

std::string trim(const std::string& s) {
  std::size_t b = s.find_first_not_of(" \t\r\n");
  if (b == std::string::npos) return "";
  std::size_t e = s.find_last_not_of(" \t\r\n");
  return s.substr(b, e - b + 1);
}

std::string unquote(std::string value) {
  if (value.size() >= 2 && ((value.front() == '"' && value.back() == '"') ||
                            (value.front() == '\'' && value.back() == '\''))) {
    return value.substr(1, value.size() - 2);
  }
  return value;
}

std::string strip_comment(const std::string& line) {
  bool in_string = false;
  char quote = '"';
  for (std::size_t i = 0; i < line.size(); ++i) {
    const char c = line[i];
    if (in_string) {
      if (c == quote) in_string = false;
    } else if (c == '"' || c == '\'') {
      in_string = true;
      quote = c;
    } else if (c == '#') {
      return line.substr(0, i);
    }
  }
  return line;
}

}  // namespace

FileConfig FileConfig::parse_text(const std::string& text) {
  FileConfig config;
  std::istringstream in(text);
  std::string line;
  std::string section;
  int line_no = 0;
  while (std::getline(in, line)) {
    line_no++;
    line = trim(strip_comment(line));
    if (line.empty()) continue;
    if (line.front() == '[') {
      if (line.back() != ']') {
        throw ConfigError("config line " + std::to_string(line_no) +
                          ": unterminated section header");
      }
      section = trim(line.substr(1, line.size() - 2));
      continue;
    }
    const auto eq = line.find('=');
    if (eq == std::string::npos) {
      throw ConfigError("config line " + std::to_string(line_no) +
                        ": expected key = value");
    }
    const std::string key = trim(line.substr(0, eq));
    const std::string value = unquote(trim(line.substr(eq + 1)));
    if (key.empty()) {
      throw ConfigError("config line " + std::to_string(line_no) + ": empty key");
    }
    config.values_[section.empty() ? key : section + "." + key] = value;
  }
  return config;
}

FileConfig FileConfig::parse_file(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in.is_open()) {
    throw ConfigError("cannot open config file: " + path.string());
  }
  std::ostringstream buffer;
  buffer << in.rdbuf();
  return parse_text(buffer.str());
}

void FileConfig::set(const std::string& assignment) {
  const auto eq = assignment.find('=');
  if (eq == std::string::npos || eq == 0) {
    throw ConfigError("override must be key=value: " + assignment);
  }
  values_[trim(assignment.substr(0, eq))] = unquote(trim(assignment.substr(eq + 1)));
}

std::optional<std::string> FileConfig::get(const std::string& key) const {
  auto it = values_.find(key);
  if (it == values_.end()) return std::nullopt;
  return it->second;
}

std::string FileConfig::get_or(const std::string& key,
                               const std::string& fallback) const {
  return get(key).value_or(fallback);
}

double FileConfig::number(const std::string& key, double fallback) const {
  const auto value = get(key);
  if (!value) return fallback;
  try {
    std::size_t used = 0;
    const double parsed = std::stod(*value, &used);
    if (used != value->size()) throw std::invalid_argument(*value);
    return parsed;
  } catch (...) {
    throw ConfigError("config value for '" + key + "' is not a number: " + *value);
  }
}

long long FileConfig::integer(const std::string& key, long long fallback) const {
  const auto value = get(key);
  if (!value) return fallback;
  long long parsed = 0;
  const char* begin = value->data();
  const char* end = begin + value->size();
  auto [ptr, ec] = std::from_chars(begin, end, parsed);
  if (ec != std::errc() || ptr != end) {
    throw ConfigError("config value for '" + key + "' is not an integer: " + *value);
  }
  return parsed;
}

bool FileConfig::boolean(const std::string& key, bool fallback) const {
  const auto value = get(key);
  if (!value) return fallback;
  std::string lowered = *value;
  std::transform(lowered.begin(), lowered.end(), lowered.begin(),
                 [](unsigned char c) { return std::tolower(c); });
  if (lowered == "true" || lowered == "1" || lowered == "yes") return true;
  if (lowered == "false" || lowered == "0" || lowered == "no") return false;
  throw ConfigError("config value for '" + key + "' is not a boolean: " + *value);
}

RunConfig run_config_from_file(const FileConfig& file) {
  RunConfig config;
  config.dataset_path = dataset_root_from_file(file).string();
  config.schema_path =
      schema_path_from_file(file, config.dataset_path).string();
  config.n_type = static_cast<std::size_t>(file.integer("run.n_type", 16));
  config.n_inv = static_cast<std::size_t>(file.integer("run.n_inv", 32));
  config.n_sel = static_cast<std::size_t>(file.integer("run.n_sel", 30));
  config.alpha = file.number("run.alpha", 0.5);
  config.omega_opt = static_cast<std::size_t>(file.integer("run.omega_opt", 5));
  config.seed = static_cast<std::uint64_t>(file.integer("run.seed", 0));
  config.start_date = file.get_or("run.start", "");
  config.end_date = file.get_or("run.end", "");
  config.top_fraction = file.number("run.top_fraction", 0.2);
  config.workers = static_cast<std::size_t>(file.integer("run.workers", 1));
  config.keep_trace = file.boolean("run.keep_trace", false);
  if (config.n_type < 1 || config.n_inv < 1 || config.n_sel < 1) {
    throw ConfigError("run.n_type, run.n_inv and run.n_sel must be >= 1");
  }
  if (config.alpha < 0.0 || config.alpha > 1.0) {
    throw ConfigError("run.alpha must lie in [0, 1]");
  }
  if (config.omega_opt < 1) throw ConfigError("run.omega_opt must be >= 1");
  if (config.top_fraction <= 0.0 || config.top_fraction > 1.0) {
    throw ConfigError("run.top_fraction must lie in (0, 1]");
  }

  const std::string provider = file.get_or("run.provider", "deterministic");
  const auto kind = parse_provider_kind(provider);
  if (!kind) throw ConfigError("unknown provider kind: " + provider);
  config.provider = *kind;

  config.anneal.initial_temperature = file.number("anneal.initial_temperature", 40.0);
  config.anneal.max_iterations =
      static_cast<int>(file.integer("anneal.max_iterations", 100));
  config.anneal.cooling_rate = file.number("anneal.cooling_rate", 0.95);
  config.anneal.step_scale = file.number("anneal.step_scale", 2.0);
  config.anneal.seed = static_cast<std::uint64_t>(file.integer("anneal.seed", 0));
  if (config.anneal.initial_temperature <= 0 || config.anneal.max_iterations < 0 ||
      config.anneal.cooling_rate <= 0 || config.anneal.cooling_rate >= 1 ||
      config.anneal.step_scale <= 0) {
    throw ConfigError("invalid [anneal] settings");
  }

  config.ablations.no_pmd = file.boolean("ablations.no_pmd", false);
  config.ablations.no_bo = file.boolean("ablations.no_bo", false);
  config.ablations.no_mdh = file.boolean("ablations.no_mdh", false);
  config.ablations.daily_pool_update =
      file.boolean("ablations.daily_pool_update", false);
  config.ablations.daily_strategy_update =
      file.boolean("ablations.daily_strategy_update", false);

  config.det_noise_scale = file.number("det.noise_scale", 1.0);
  if (file.has("det.rationality")) {
    config.det_rationality = file.number("det.rationality", 0.5);
  }

  config.llm.endpoint_url = file.get_or("llm.endpoint_url", "");
  config.llm.model_name = file.get_or("llm.model_name", "");
  config.llm.style_temperature = file.number("llm.style_temperature", 0.7);
  config.llm.selection_temperature = file.number("llm.selection_temperature", 0.2);
  config.llm.max_retries = static_cast<int>(file.integer("llm.max_retries", 2));
  config.llm.requests_per_minute =
      static_cast<int>(file.integer("llm.requests_per_minute", 120));
  config.llm.api_key_env = file.get_or("llm.api_key_env", "MASS_LLM_API_KEY");
  config.llm.cache_dir = file.get_or("llm.cache_dir", "");
  config.llm.replay_only = file.boolean("llm.replay_only", false);
  if (config.provider == ProviderKind::llm && config.llm.endpoint_url.empty() &&
      !config.llm.replay_only) {
    throw ConfigError("llm.endpoint_url is required for the llm provider");
  }
  return config;
}

BacktestConfig backtest_config_from_file(const FileConfig& file) {
  BacktestConfig config;
  const std::string rebalance = file.get_or("backtest.rebalance", "weekly");
  if (rebalance == "weekly") {
    config.rebalance = BacktestConfig::Rebalance::weekly;
  } else if (rebalance == "daily") {
    config.rebalance = BacktestConfig::Rebalance::daily;
  } else {
    throw ConfigError("backtest.rebalance must be weekly or daily");
  }
  config.top_fraction = file.number("backtest.top_fraction", 0.2);
  config.round_trip_cost = file.number("backtest.round_trip_cost", 0.001);
  const std::string execution = file.get_or("backtest.execution_price", "ref");
  if (execution == "ref") {
    config.execution_price = BacktestConfig::ExecutionPrice::ref;
  } else if (execution == "open") {
    config.execution_price = BacktestConfig::ExecutionPrice::open;
  } else {
    throw ConfigError("backtest.execution_price must be ref or open");
  }
  config.periods_per_year =
      static_cast<int>(file.integer("backtest.periods_per_year", 252));
  config.risk_free_periodic = file.number("backtest.risk_free", 0.0);
  if (config.top_fraction <= 0.0 || config.top_fraction > 1.0) {
    throw ConfigError("backtest.top_fraction must lie in (0, 1]");
  }
  if (config.round_trip_cost < 0.0) {
    throw ConfigError("backtest.round_trip_cost must be >= 0");
  }
  return config;
}

std::filesystem::path dataset_root_from_file(const FileConfig& file) {
  if (const auto path = file.get("dataset.path")) return *path;
  if (const char* env = std::getenv("MASS_DATA_DIR")) return env;
  throw ConfigError("dataset.path is not set and MASS_DATA_DIR is empty");
}

std::filesystem::path schema_path_from_file(const FileConfig& file,
                                            const std::filesystem::path& root) {
  if (const auto path = file.get("dataset.schema")) return *path;
  return root / "schema.txt";
}

}  // namespace mass
