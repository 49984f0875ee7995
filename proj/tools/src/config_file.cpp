#include "nudgekit_cli/config_file.hpp"

#include <cctype>
#include <fstream>
#include <sstream>

#include "nudgekit/errors.hpp"

namespace nudgekit::cli {

std::string trim(std::string_view s) {
  const auto first = s.find_first_not_of(" \t\r");
  if (first == std::string_view::npos) return {};
  const auto last = s.find_last_not_of(" \t\r");
  return std::string(s.substr(first, last - first + 1));
}

namespace {

bool valid_key(const std::string& key) {
  if (key.empty() || key.front() == '.' || key.back() == '.') return false;
  for (char c : key)
    if (!(std::isalnum(static_cast<unsigned char>(c)) || c == '_' || c == '.')) return false;
  return key.find("..") == std::string::npos;
}

}  // namespace

ConfigFile ConfigFile::parse(std::string_view text, std::string source) {
  ConfigFile cfg;
  cfg.text_ = std::string(text);
  cfg.source_ = std::move(source);
  std::istringstream is(cfg.text_);
  std::string line;
  int number = 0;
  while (std::getline(is, line)) {
    ++number;
    const std::string body = trim(line);
    if (body.empty() || body.front() == '#') continue;
    const auto where = cfg.source_ + ":" + std::to_string(number);
    const auto eq = body.find('=');
    if (eq == std::string::npos) throw ConfigError(where + ": expected 'key = value'");
    std::string key = trim(std::string_view(body).substr(0, eq));
    std::string value = trim(std::string_view(body).substr(eq + 1));
    if (!valid_key(key)) throw ConfigError(where + ": invalid key '" + key + "'");
    if (cfg.values_.count(key))
      throw ConfigError(where + ": duplicate key '" + key + "' (first at line " + std::to_string(cfg.lines_[key]) +
                        ")");
    cfg.values_.emplace(key, std::move(value));
    cfg.lines_.emplace(std::move(key), number);
  }
  return cfg;
}

ConfigFile ConfigFile::load(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ConfigError("cannot open config " + path.string());
  std::ostringstream buffer;
  buffer << in.rdbuf();
  return parse(buffer.str(), path.string());
}

std::optional<std::string> ConfigFile::take(const std::string& key) const {
  const auto it = values_.find(key);
  if (it == values_.end()) return std::nullopt;
  used_.insert(key);
  return it->second;
}

void ConfigFile::set(const std::string& key, std::string value) {
  if (!valid_key(key)) throw ConfigError("invalid key '" + key + "'");
  values_[key] = std::move(value);
}

std::vector<std::string> ConfigFile::keys() const {
  std::vector<std::string> out;
  for (const auto& [k, v] : values_) out.push_back(k);
  return out;
}

void ConfigFile::reject_unused() const {
  std::string unknown;
  for (const auto& [k, v] : values_)
    if (!used_.count(k)) {
      if (!unknown.empty()) unknown += ", ";
      unknown += k;
      if (lines_.count(k)) unknown += " (line " + std::to_string(lines_.at(k)) + ")";
    }
  if (!unknown.empty()) throw ConfigError(source_ + ": unknown keys: " + unknown);
}

}  // namespace nudgekit::cli
