#pragma once

#include <map>
#include <stdexcept>
#include <string>
#include <variant>
#include <vector>

namespace hettwin {

/// Error raised on malformed or out-of-range configuration input.
/// Carries the source line and dotted field path for diagnostics.
class ConfigError : public std::runtime_error {
 public:
  ConfigError(std::string message, int line, std::string field)
      : std::runtime_error(format(message, line, field)),
        line_(line),
        field_(std::move(field)) {}

  int line() const { return line_; }
  const std::string& field() const { return field_; }

 private:
  static std::string format(const std::string& msg, int line, const std::string& field) {
    std::string s = "config error";
    if (line > 0) s += " at line " + std::to_string(line);
    if (!field.empty()) s += " (field " + field + ")";
    return s + ": " + msg;
  }
  int line_ = 0;
  std::string field_;
};

/// Key/value configuration with [section] headers. Values are numbers,
/// booleans, quoted strings, or flat arrays of numbers.
class Config {
 public:
  using Value = std::variant<double, bool, std::string, std::vector<double>>;

  static Config parse_file(const std::string& path);
  static Config parse_string(const std::string& text, const std::string& origin = "<string>");

  bool has(const std::string& section, const std::string& key) const;

  double num(const std::string& section, const std::string& key) const;
  double num_or(const std::string& section, const std::string& key, double fallback) const;
  bool boolean_or(const std::string& section, const std::string& key, bool fallback) const;
  std::string str_or(const std::string& section, const std::string& key,
                     const std::string& fallback) const;
  std::vector<double> array_or(const std::string& section, const std::string& key,
                               const std::vector<double>& fallback) const;

  /// Source line of a key, 0 if absent. Used by validation diagnostics.
  int line_of(const std::string& section, const std::string& key) const;

  const std::map<std::string, std::map<std::string, Value>>& sections() const {
    return sections_;
  }

  /// Overwrite or insert a numeric key (CLI sweeps use this).
  void set_num(const std::string& section, const std::string& key, double v) {
    sections_[section][key] = v;
  }

 private:
  const Value* find(const std::string& section, const std::string& key) const;

  std::map<std::string, std::map<std::string, Value>> sections_;
  std::map<std::string, int> lines_;  // "section.key" -> source line
  std::string origin_;
};

}  // namespace hettwin
