#pragma once

#include <filesystem>
#include <optional>
#include <string>
#include <vector>

namespace mass::csv {

struct Table {
  std::vector<std::string> header;
  std::vector<std::vector<std::string>> rows;

  // Index of a header column, or nullopt when absent.
  std::optional<std::size_t> column(const std::string& name) const;
};

// Reads a comma-separated UTF-8 file with a header row. Fields may be quoted
// with double quotes; quoted fields may contain commas, escaped quotes ("")
// and newlines. Throws std::runtime_error when the file cannot be opened.
Table read_file(const std::filesystem::path& path);

// Parses CSV content from a string (same dialect as read_file).
Table parse(const std::string& content);

// Quotes a field only when it needs quoting.
std::string escape_field(const std::string& field);

std::string join_row(const std::vector<std::string>& fields);

}  // namespace mass::csv
