#include "drf/runio.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <ctime>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <stdexcept>

namespace drf {

namespace {

std::string trim(const std::string& s) {
  const auto a = s.find_first_not_of(" \t\r\n");
  if (a == std::string::npos) return "";
  const auto b = s.find_last_not_of(" \t\r\n");
  return s.substr(a, b - a + 1);
}

std::uint64_t fnv1a(const std::string& s) {
  std::uint64_t h = 0xCBF29CE484222325ULL;
  for (unsigned char c : s) {
    h ^= c;
    h *= 0x100000001B3ULL;
  }
  return h;
}

}  // namespace

Config Config::from_file(const std::string& path) {
  std::ifstream is(path);
  if (!is) throw std::runtime_error("config: cannot open '" + path + "'");
  std::stringstream ss;
  ss << is.rdbuf();
  return from_string(ss.str());
}

Config Config::from_string(const std::string& text) {
  Config cfg;
  std::istringstream is(text);
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(is, line)) {
    ++lineno;
    const auto hash = line.find('#');
    if (hash != std::string::npos) line = line.substr(0, hash);
    line = trim(line);
    if (line.empty()) continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos) {
      throw std::runtime_error("config: line " + std::to_string(lineno) +
                               " is not 'key = value'");
    }
    const std::string key = trim(line.substr(0, eq));
    const std::string value = trim(line.substr(eq + 1));
    if (key.empty()) {
      throw std::runtime_error("config: empty key on line " +
                               std::to_string(lineno));
    }
    if (cfg.kv_.count(key)) {
      throw std::runtime_error("config: duplicate key '" + key + "'");
    }
    cfg.kv_[key] = value;
  }
  return cfg;
}

void Config::merge_override(const std::string& key, const std::string& value) {
  kv_[key] = value;
}

void Config::restrict_keys(const std::vector<std::string>& allowed) const {
  for (const auto& [k, v] : kv_) {
    if (std::find(allowed.begin(), allowed.end(), k) == allowed.end()) {
      throw std::runtime_error("config: unknown key '" + k + "'");
    }
  }
}

std::string Config::get(const std::string& key,
                        const std::string& fallback) const {
  const auto it = kv_.find(key);
  return it == kv_.end() ? fallback : it->second;
}

double Config::get_double(const std::string& key, double fallback) const {
  const auto it = kv_.find(key);
  if (it == kv_.end()) return fallback;
  try {
    std::size_t pos = 0;
    const double v = std::stod(it->second, &pos);
    if (pos != it->second.size()) throw std::invalid_argument("trailing");
    return v;
  } catch (const std::exception&) {
    throw std::runtime_error("config: key '" + key + "' is not a number: '" +
                             it->second + "'");
  }
}

std::uint64_t Config::get_u64(const std::string& key,
                              std::uint64_t fallback) const {
  const auto it = kv_.find(key);
  if (it == kv_.end()) return fallback;
  try {
    return std::stoull(it->second);
  } catch (const std::exception&) {
    throw std::runtime_error("config: key '" + key +
                             "' is not an unsigned integer");
  }
}

bool Config::get_bool(const std::string& key, bool fallback) const {
  const auto it = kv_.find(key);
  if (it == kv_.end()) return fallback;
  const std::string& v = it->second;
  if (v == "true" || v == "1" || v == "on" || v == "yes") return true;
  if (v == "false" || v == "0" || v == "off" || v == "no") return false;
  throw std::runtime_error("config: key '" + key + "' is not a boolean");
}

nlohmann::json Config::to_json() const {
  nlohmann::json j = nlohmann::json::object();
  for (const auto& [k, v] : kv_) j[k] = v;
  return j;
}

std::uint64_t Config::hash() const { return fnv1a(to_json().dump()); }

std::vector<double> parse_grid(const std::string& text) {
  if (text.empty()) throw std::runtime_error("grid: empty specification");
  std::vector<double> out;
  if (text.find(':') != std::string::npos) {
    double lo = 0, hi = 0, step = 0;
    char c1 = 0, c2 = 0;
    std::istringstream is(text);
    if (!(is >> lo >> c1 >> hi >> c2 >> step) || c1 != ':' || c2 != ':' ||
        step <= 0) {
      throw std::runtime_error("grid: expected lo:hi:step, got '" + text + "'");
    }
    for (double v = lo; v <= hi + 1e-9; v += step) out.push_back(v);
  } else {
    std::istringstream is(text);
    std::string tok;
    while (std::getline(is, tok, ',')) {
      if (tok.empty()) continue;
      out.push_back(std::stod(tok));
    }
  }
  if (out.empty()) throw std::runtime_error("grid: no values in '" + text + "'");
  return out;
}

CsvWriter::CsvWriter(std::vector<std::string> header)
    : header_(std::move(header)) {}

void CsvWriter::add_row(const std::vector<std::string>& cells) {
  if (cells.size() != header_.size()) {
    throw std::logic_error("csv: row width mismatch");
  }
  for (std::size_t i = 0; i < cells.size(); ++i) {
    if (i) body_ += ",";
    body_ += cells[i];
  }
  body_ += "\n";
  ++rows_;
}

void CsvWriter::write(const std::string& path) const {
  std::string out;
  for (std::size_t i = 0; i < header_.size(); ++i) {
    if (i) out += ",";
    out += header_[i];
  }
  out += "\n";
  out += body_;
  write_text_file(path, out);
}

std::string format_double(double v) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

std::string format_rate(double v) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.10e", v);
  return buf;
}

std::string format_hex64(std::uint64_t v) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%016llx", static_cast<unsigned long long>(v));
  return buf;
}

std::string make_run_dir(const std::string& base_override,
                         std::uint64_t seed) {
  std::string base = base_override;
  if (base.empty()) {
    if (const char* env = std::getenv("DRF_RUN_DIR")) base = env;
  }
  if (base.empty()) base = "runs";
  std::time_t now = std::time(nullptr);
  std::tm tm_utc{};
  gmtime_r(&now, &tm_utc);
  char stamp[32];
  std::strftime(stamp, sizeof(stamp), "%Y%m%d-%H%M%S", &tm_utc);
  std::string dir = base + "/" + stamp + "-seed" + std::to_string(seed);
  // Keep names unique if two runs land in the same second.
  std::string candidate = dir;
  int suffix = 1;
  while (std::filesystem::exists(candidate)) {
    candidate = dir + "." + std::to_string(suffix++);
  }
  std::filesystem::create_directories(candidate);
  return candidate;
}

void write_text_file(const std::string& path, const std::string& content) {
  const std::string tmp = path + ".tmp";
  {
    std::ofstream os(tmp, std::ios::binary | std::ios::trunc);
    if (!os) throw std::runtime_error("cannot open '" + tmp + "'");
    os.write(content.data(), static_cast<std::streamsize>(content.size()));
    if (!os) throw std::runtime_error("write failed for '" + tmp + "'");
  }
  std::filesystem::rename(tmp, path);
}

void write_metadata(const std::string& run_dir, const std::string& command,
                    const Config& config, std::uint64_t seed) {
  nlohmann::json j;
  j["schema"] = "drf-run-v1";
  j["csv_schema"] = kCsvSchemaVersion;
  j["command"] = command;
  j["config"] = config.to_json();
  j["config_hash"] = format_hex64(config.hash());
  j["seed"] = seed;
  j["version"] = kVersionString;
  write_text_file(run_dir + "/metadata.jsonl", j.dump() + "\n");
}

}  // namespace drf
