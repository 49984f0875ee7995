#pragma once

#include <filesystem>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <string_view>
#include <vector>

namespace nudgekit::cli {

/// Flat `key = value` text. Blank lines and lines starting with '#' are
/// ignored; keys are dotted names. A key may appear once. An empty value is
/// kept as an empty string (unset for optional settings).
///
/// Lookups mark keys as used so that leftovers can be reported as unknown.
class ConfigFile {
 public:
  static ConfigFile parse(std::string_view text, std::string source = "<config>");
  static ConfigFile load(const std::filesystem::path& path);

  /// The exact bytes that were parsed.
  const std::string& text() const { return text_; }
  const std::string& source() const { return source_; }

  bool contains(const std::string& key) const { return values_.count(key) != 0; }
  std::optional<std::string> take(const std::string& key) const;
  /// Adds or replaces a value (command-line overrides).
  void set(const std::string& key, std::string value);

  std::vector<std::string> keys() const;
  /// Throws ConfigError listing every key no lookup asked for.
  void reject_unused() const;

 private:
  std::string text_;
  std::string source_;
  std::map<std::string, std::string> values_;
  std::map<std::string, int> lines_;
  mutable std::set<std::string> used_;
};

std::string trim(std::string_view s);

}  // namespace nudgekit::cli
