#include "config.hpp"

#include <charconv>
#include <cmath>
#include <fstream>
#include <sstream>

#include <boost/property_tree/ini_parser.hpp>

namespace genens::cli {
namespace {

std::string trim(std::string s) {
  const auto b = s.find_first_not_of(" \t\r\n");
  if (b == std::string::npos) return "";
  const auto e = s.find_last_not_of(" \t\r\n");
  return s.substr(b, e - b + 1);
}

std::string field(const std::string& section, const std::string& key) {
  return "[" + section + "] " + key;
}

std::uint64_t fnv1a(const std::string& bytes) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char c : bytes) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  return h;
}

}  // namespace

Config Config::load(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ConfigError("cannot open config file " + path.string());
  std::stringstream ss;
  ss << in.rdbuf();
  return parse(ss.str(), path.parent_path().empty() ? "." : path.parent_path());
}

Config Config::parse(const std::string& text, std::filesystem::path base_dir) {
  Config c;
  c.base_dir_ = std::move(base_dir);
  c.hash_ = fnv1a(text);
  std::istringstream in(text);
  try {
    boost::property_tree::ini_parser::read_ini(in, c.tree_);
  } catch (const boost::property_tree::ini_parser_error& e) {
    throw ConfigError("config line " + std::to_string(e.line()) + ": " + e.message());
  }
  for (const auto& [name, sec] : c.tree_)
    if (sec.empty() && !sec.data().empty())
      throw ConfigError("config key '" + name + "' must appear inside a [section]");
  return c;
}

bool Config::has_section(const std::string& section) const {
  return tree_.get_child_optional(section).has_value();
}

bool Config::has(const std::string& section, const std::string& key) const {
  const auto sec = tree_.get_child_optional(section);
  return sec && sec->find(key) != sec->not_found();
}

std::string Config::text(const std::string& section, const std::string& key,
                         std::optional<std::string> fallback) {
  const auto sec = tree_.get_child_optional(section);
  if (sec) {
    const auto it = sec->find(key);
    if (it != sec->not_found()) return trim(it->second.data());
  }
  if (!fallback) throw ConfigError(field(section, key) + ": required field is missing");
  return *fallback;
}

double Config::number(const std::string& section, const std::string& key,
                      std::optional<double> fallback) {
  std::optional<std::string> fb;
  if (fallback) fb = "";
  const std::string s = text(section, key, fb);
  if (s.empty() && fallback) return *fallback;
  if (s == "inf" || s == "+inf") return INFINITY;
  double v = 0.0;
  const auto [end, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (ec != std::errc() || end != s.data() + s.size() || std::isnan(v))
    throw ConfigError(field(section, key) + ": expected a number, got '" + s + "'");
  return v;
}

std::size_t Config::count(const std::string& section, const std::string& key,
                          std::optional<std::size_t> fallback) {
  std::optional<double> fb;
  if (fallback) fb = static_cast<double>(*fallback);
  const double v = number(section, key, fb);
  if (v < 0.0 || v != std::floor(v) || std::isinf(v))
    throw ConfigError(field(section, key) + ": expected a non-negative integer");
  return static_cast<std::size_t>(v);
}

std::vector<std::string> Config::list(const std::string& section, const std::string& key,
                                      std::optional<std::vector<std::string>> fallback) {
  if (!has(section, key)) {
    if (!fallback) throw ConfigError(field(section, key) + ": required field is missing");
    return *fallback;
  }
  std::vector<std::string> out;
  std::stringstream ss(text(section, key));
  std::string item;
  while (std::getline(ss, item, ',')) {
    item = trim(item);
    if (item.empty()) throw ConfigError(field(section, key) + ": empty list entry");
    out.push_back(item);
  }
  if (out.empty()) throw ConfigError(field(section, key) + ": empty list");
  return out;
}

std::vector<std::size_t> Config::counts(const std::string& section, const std::string& key,
                                        std::optional<std::vector<std::size_t>> fallback) {
  std::optional<std::vector<std::string>> fb;
  if (fallback) fb.emplace();
  const auto items = list(section, key, fb);
  if (items.empty() && fallback) return *fallback;
  std::vector<std::size_t> out;
  for (const auto& s : items) {
    std::size_t v = 0;
    const auto [end, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
    if (ec != std::errc() || end != s.data() + s.size())
      throw ConfigError(field(section, key) + ": expected integers, got '" + s + "'");
    out.push_back(v);
  }
  return out;
}

std::filesystem::path Config::existing_path(const std::string& section, const std::string& key) {
  std::filesystem::path p = text(section, key);
  if (p.is_relative()) p = base_dir_ / p;
  if (!std::filesystem::exists(p))
    throw ConfigError(field(section, key) + ": file not found: " + p.string());
  return p;
}

std::vector<std::pair<std::string, std::string>> Config::section(const std::string& section) {
  std::vector<std::pair<std::string, std::string>> out;
  const auto sec = tree_.get_child_optional(section);
  if (!sec) return out;
  for (const auto& [k, v] : *sec) {
    out.emplace_back(k, trim(v.data()));
  }
  return out;
}

void Config::check_keys(const std::map<std::string, std::set<std::string>>& allowed,
                        const std::set<std::string>& open) const {
  for (const auto& [name, sec] : tree_) {
    if (open.count(name)) continue;
    const auto it = allowed.find(name);
    if (it == allowed.end()) throw ConfigError("[" + name + "]: unknown section");
    for (const auto& [key, value] : sec)
      if (!it->second.count(key)) throw ConfigError(field(name, key) + ": unknown field");
  }
}

}  // namespace genens::cli
