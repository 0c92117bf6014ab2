#pragma once

// CSV and manifest output. Floats are written in the shortest form that
// parses back to the same double; lines end in LF.

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <variant>
#include <vector>

#include <json.hpp>

namespace dbql {

using CsvCell = std::variant<std::string, double, std::int64_t, std::uint64_t>;
using CsvRow = std::vector<CsvCell>;

std::string format_double(double x);
std::string format_cell(const CsvCell& cell);

class CsvTable {
 public:
  explicit CsvTable(std::vector<std::string> header);

  void add(CsvRow row);  // row width must match the header
  const std::vector<std::string>& header() const noexcept { return header_; }
  const std::vector<CsvRow>& rows() const noexcept { return rows_; }
  std::string to_string() const;

 private:
  std::vector<std::string> header_;
  std::vector<CsvRow> rows_;
};

// Throws IoError with the path on failure.
void write_text_file(const std::filesystem::path& path, const std::string& text);
std::string read_text_file(const std::filesystem::path& path);
void write_csv(const std::filesystem::path& path, const CsvTable& table);

std::uint64_t fnv1a64(std::string_view bytes);
std::string hex64(std::uint64_t x);

struct ManifestInfo {
  std::string subcommand;
  std::uint64_t seed = 0;
  nlohmann::json config;
  std::vector<std::filesystem::path> outputs;  // files inside the output directory
  std::optional<double> wall_seconds;          // recorded only when requested
};

// manifest.json in `dir`: subcommand, version, seed, config and its hash, and
// the FNV-1a hash of every output file.
void write_manifest(const std::filesystem::path& dir, const ManifestInfo& info);

}  // namespace dbql
