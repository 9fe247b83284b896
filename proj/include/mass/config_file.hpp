#pragma once

#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "mass/backtest.hpp"
#include "mass/engine.hpp"

namespace mass {

// Flat view of a sectioned key-value config file:
//   [run]
//   n_type = 16
// becomes {"run.n_type": "16"}. Values may be bare, "quoted", numbers or
// booleans; '#' starts a comment.
class FileConfig {
 public:
  static FileConfig parse_file(const std::filesystem::path& path);
  static FileConfig parse_text(const std::string& text);

  // Applies a "section.key=value" override (the --set flag).
  void set(const std::string& assignment);

  bool has(const std::string& key) const { return values_.count(key) > 0; }
  std::optional<std::string> get(const std::string& key) const;
  std::string get_or(const std::string& key, const std::string& fallback) const;
  double number(const std::string& key, double fallback) const;
  long long integer(const std::string& key, long long fallback) const;
  bool boolean(const std::string& key, bool fallback) const;

  const std::map<std::string, std::string>& values() const { return values_; }

 private:
  std::map<std::string, std::string> values_;
};

// Maps the [dataset]/[run]/[anneal]/[ablations]/[llm]/[det] sections onto a
// RunConfig. Throws ConfigError on unknown enums or malformed numbers.
RunConfig run_config_from_file(const FileConfig& file);

// Maps the [backtest] section onto a BacktestConfig.
BacktestConfig backtest_config_from_file(const FileConfig& file);

// Dataset root: [dataset].path, falling back to the MASS_DATA_DIR
// environment variable.
std::filesystem::path dataset_root_from_file(const FileConfig& file);

// Schema path: [dataset].schema, defaulting to <root>/schema.txt.
std::filesystem::path schema_path_from_file(const FileConfig& file,
                                            const std::filesystem::path& root);

}  // namespace mass
