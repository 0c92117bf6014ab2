#include "dbql/io.hpp"

#include <charconv>
#include <cmath>
#include <fstream>
#include <sstream>

#include "dbql/errors.hpp"

namespace dbql {

std::string format_double(double x) {
  if (std::isnan(x)) return "nan";
  if (std::isinf(x)) return x > 0 ? "inf" : "-inf";
  char buf[64];
  const auto res = std::to_chars(buf, buf + sizeof buf, x);
  return std::string(buf, res.ptr);
}

std::string format_cell(const CsvCell& cell) {
  struct Visitor {
    std::string operator()(const std::string& s) const {
      if (s.find_first_of(",\"\n\r") == std::string::npos) return s;
      std::string out = "\"";
      for (char c : s) {
        if (c == '"') out += '"';
        out += c;
      }
      return out + "\"";
    }
    std::string operator()(double x) const { return format_double(x); }
    std::string operator()(std::int64_t x) const { return std::to_string(x); }
    std::string operator()(std::uint64_t x) const { return std::to_string(x); }
  };
  return std::visit(Visitor{}, cell);
}

CsvTable::CsvTable(std::vector<std::string> header) : header_(std::move(header)) {
  require(!header_.empty(), "csv: header must have at least one column");
}

void CsvTable::add(CsvRow row) {
  require(row.size() == header_.size(), "csv: row width does not match the header");
  rows_.push_back(std::move(row));
}

std::string CsvTable::to_string() const {
  std::string out;
  for (std::size_t i = 0; i < header_.size(); ++i) {
    if (i) out += ',';
    out += format_cell(header_[i]);
  }
  out += '\n';
  for (const auto& row : rows_) {
    for (std::size_t i = 0; i < row.size(); ++i) {
      if (i) out += ',';
      out += format_cell(row[i]);
    }
    out += '\n';
  }
  return out;
}

void write_text_file(const std::filesystem::path& path, const std::string& text) {
  std::error_code ec;
  if (path.has_parent_path()) {
    std::filesystem::create_directories(path.parent_path(), ec);
    if (ec) throw IoError(path.parent_path().string(), ec.message());
  }
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw IoError(path.string(), "cannot open for writing");
  out.write(text.data(), static_cast<std::streamsize>(text.size()));
  out.flush();
  if (!out) throw IoError(path.string(), "write failed");
}

std::string read_text_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError(path.string(), "cannot open for reading");
  std::ostringstream ss;
  ss << in.rdbuf();
  if (in.bad()) throw IoError(path.string(), "read failed");
  return ss.str();
}

void write_csv(const std::filesystem::path& path, const CsvTable& table) {
  write_text_file(path, table.to_string());
}

std::uint64_t fnv1a64(std::string_view bytes) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char c : bytes) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  return h;
}

std::string hex64(std::uint64_t x) {
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(x));
  return buf;
}

void write_manifest(const std::filesystem::path& dir, const ManifestInfo& info) {
  nlohmann::json outputs = nlohmann::json::array();
  for (const auto& file : info.outputs) {
    const std::string text = read_text_file(dir / file);
    outputs.push_back({{"file", file.generic_string()}, {"fnv1a64", hex64(fnv1a64(text))}});
  }
  nlohmann::json doc = {{"subcommand", info.subcommand},
                        {"version", DBQL_VERSION},
                        {"seed", info.seed},
                        {"config", info.config},
                        {"config_fnv1a64", hex64(fnv1a64(info.config.dump()))},
                        {"seed_rule", "run i uses mix64(seed ^ mix64(i + 1))"},
                        {"outputs", outputs}};
  if (info.wall_seconds) doc["wall_seconds"] = *info.wall_seconds;
  write_text_file(dir / "manifest.json", doc.dump(2) + "\n");
}

}  // namespace dbql
