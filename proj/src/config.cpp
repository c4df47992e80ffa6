#include "hettwin/config.hpp"

#include <cctype>
#include <charconv>
#include <fstream>
#include <sstream>

namespace hettwin {

namespace {

std::string trim(const std::string& s) {
  size_t a = s.find_first_not_of(" \t\r");
  if (a == std::string::npos) return "";
  size_t b = s.find_last_not_of(" \t\r");
  return s.substr(a, b - a + 1);
}

bool parse_number(const std::string& tok, double& out) {
  std::istringstream iss(tok);
  iss >> out;
  return iss && iss.eof();
}

}  // namespace

Config Config::parse_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open file: " + path, 0, "");
  std::stringstream buf;
  buf << in.rdbuf();
  return parse_string(buf.str(), path);
}

Config Config::parse_string(const std::string& text, const std::string& origin) {
  Config cfg;
  cfg.origin_ = origin;
  std::istringstream in(text);
  std::string raw;
  std::string section;
  int line_no = 0;
  while (std::getline(in, raw)) {
    ++line_no;
    size_t hash = raw.find('#');
    if (hash != std::string::npos) raw.erase(hash);
    std::string line = trim(raw);
    if (line.empty()) continue;

    if (line.front() == '[') {
      if (line.back() != ']')
        throw ConfigError("unterminated section header", line_no, "");
      section = trim(line.substr(1, line.size() - 2));
      if (section.empty()) throw ConfigError("empty section name", line_no, "");
      cfg.sections_[section];  // allow empty sections
      continue;
    }

    size_t eq = line.find('=');
    if (eq == std::string::npos)
      throw ConfigError("expected 'key = value'", line_no, section);
    std::string key = trim(line.substr(0, eq));
    std::string val = trim(line.substr(eq + 1));
    if (key.empty()) throw ConfigError("empty key", line_no, section);
    if (val.empty())
      throw ConfigError("empty value", line_no, section + "." + key);

    Value parsed;
    if (val.front() == '"') {
      if (val.size() < 2 || val.back() != '"')
        throw ConfigError("unterminated string", line_no, section + "." + key);
      parsed = val.substr(1, val.size() - 2);
    } else if (val.front() == '[') {
      if (val.back() != ']')
        throw ConfigError("unterminated array", line_no, section + "." + key);
      std::vector<double> arr;
      std::string body = val.substr(1, val.size() - 2);
      std::istringstream items(body);
      std::string item;
      while (std::getline(items, item, ',')) {
        item = trim(item);
        if (item.empty()) continue;
        double d;
        if (!parse_number(item, d))
          throw ConfigError("bad array element '" + item + "'", line_no,
                            section + "." + key);
        arr.push_back(d);
      }
      parsed = arr;
    } else if (val == "true" || val == "false") {
      parsed = (val == "true");
    } else {
      double d;
      if (!parse_number(val, d))
        throw ConfigError("bad value '" + val + "'", line_no, section + "." + key);
      parsed = d;
    }
    cfg.sections_[section][key] = std::move(parsed);
    cfg.lines_[section + "." + key] = line_no;
  }
  return cfg;
}

const Config::Value* Config::find(const std::string& section, const std::string& key) const {
  auto sit = sections_.find(section);
  if (sit == sections_.end()) return nullptr;
  auto kit = sit->second.find(key);
  if (kit == sit->second.end()) return nullptr;
  return &kit->second;
}

bool Config::has(const std::string& section, const std::string& key) const {
  return find(section, key) != nullptr;
}

int Config::line_of(const std::string& section, const std::string& key) const {
  auto it = lines_.find(section + "." + key);
  return it == lines_.end() ? 0 : it->second;
}

double Config::num(const std::string& section, const std::string& key) const {
  const Value* v = find(section, key);
  if (!v) throw ConfigError("missing required key", 0, section + "." + key);
  if (const double* d = std::get_if<double>(v)) return *d;
  throw ConfigError("expected a number", line_of(section, key), section + "." + key);
}

double Config::num_or(const std::string& section, const std::string& key,
                      double fallback) const {
  const Value* v = find(section, key);
  if (!v) return fallback;
  if (const double* d = std::get_if<double>(v)) return *d;
  throw ConfigError("expected a number", line_of(section, key), section + "." + key);
}

bool Config::boolean_or(const std::string& section, const std::string& key,
                        bool fallback) const {
  const Value* v = find(section, key);
  if (!v) return fallback;
  if (const bool* b = std::get_if<bool>(v)) return *b;
  throw ConfigError("expected true/false", line_of(section, key), section + "." + key);
}

std::string Config::str_or(const std::string& section, const std::string& key,
                           const std::string& fallback) const {
  const Value* v = find(section, key);
  if (!v) return fallback;
  if (const std::string* s = std::get_if<std::string>(v)) return *s;
  throw ConfigError("expected a string", line_of(section, key), section + "." + key);
}

std::vector<double> Config::array_or(const std::string& section, const std::string& key,
                                     const std::vector<double>& fallback) const {
  const Value* v = find(section, key);
  if (!v) return fallback;
  if (const auto* a = std::get_if<std::vector<double>>(v)) return *a;
  if (const double* d = std::get_if<double>(v)) return {*d};
  throw ConfigError("expected an array", line_of(section, key), section + "." + key);
}

}  // namespace hettwin
