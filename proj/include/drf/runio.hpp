#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

namespace drf {

// Strict key=value config file: '#' comments, one pair per line, unknown
// keys rejected against the caller's allow-list.
class Config {
 public:
  static Config from_file(const std::string& path);
  static Config from_string(const std::string& text);

  void merge_override(const std::string& key, const std::string& value);
  void restrict_keys(const std::vector<std::string>& allowed) const;

  bool has(const std::string& key) const { return kv_.count(key) != 0; }
  std::string get(const std::string& key, const std::string& fallback) const;
  double get_double(const std::string& key, double fallback) const;
  std::uint64_t get_u64(const std::string& key, std::uint64_t fallback) const;
  bool get_bool(const std::string& key, bool fallback) const;

  const std::map<std::string, std::string>& items() const { return kv_; }
  nlohmann::json to_json() const;
  std::uint64_t hash() const;  // FNV-1a over the canonical dump

 private:
  std::map<std::string, std::string> kv_;
};

// "lo:hi:step" (inclusive) or a comma list "a,b,c".
std::vector<double> parse_grid(const std::string& text);

// Deterministic CSV writer: content is accumulated and written atomically,
// so failed runs leave no partial file.
class CsvWriter {
 public:
  explicit CsvWriter(std::vector<std::string> header);
  void add_row(const std::vector<std::string>& cells);
  void write(const std::string& path) const;
  std::size_t rows() const { return rows_; }

 private:
  std::vector<std::string> header_;
  std::string body_;
  std::size_t rows_ = 0;
};

std::string format_double(double v);      // fixed round-trip format
std::string format_rate(double v);        // %.10e
std::string format_hex64(std::uint64_t);  // 16 hex digits

// Run directory named <stamp>-seed<seed> under the base directory. The base
// comes from, in order: explicit argument, DRF_RUN_DIR, "runs". Timestamps
// appear only in the directory name, never inside result files.
std::string make_run_dir(const std::string& base_override,
                         std::uint64_t seed);

void write_text_file(const std::string& path, const std::string& content);

// One-line JSONL run metadata (schema, command, config hash, seed, version).
void write_metadata(const std::string& run_dir, const std::string& command,
                    const Config& config, std::uint64_t seed);

inline constexpr const char* kVersionString = "drfcode 0.1.0";
inline constexpr const char* kCsvSchemaVersion = "drf-csv-v1";

}  // namespace drf
