#pragma once

#include <filesystem>
#include <map>
#include <optional>
#include <set>
#include <stdexcept>
#include <string>
#include <vector>

#include <boost/property_tree/ptree.hpp>

namespace genens::cli {

// Invalid configuration; maps to exit code 1.
class ConfigError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Sectioned key-value file: "[section]" headers then "key = value" lines.
class Config {
 public:
  static Config load(const std::filesystem::path& path);
  static Config parse(const std::string& text, std::filesystem::path base_dir = ".");

  bool has(const std::string& section, const std::string& key) const;
  bool has_section(const std::string& section) const;

  std::string text(const std::string& section, const std::string& key,
                   std::optional<std::string> fallback = std::nullopt);
  double number(const std::string& section, const std::string& key,
                std::optional<double> fallback = std::nullopt);
  std::size_t count(const std::string& section, const std::string& key,
                    std::optional<std::size_t> fallback = std::nullopt);
  std::vector<std::string> list(const std::string& section, const std::string& key,
                                std::optional<std::vector<std::string>> fallback = std::nullopt);
  std::vector<std::size_t> counts(const std::string& section, const std::string& key,
                                  std::optional<std::vector<std::size_t>> fallback = std::nullopt);
  // Path relative to the config file; must exist.
  std::filesystem::path existing_path(const std::string& section, const std::string& key);

  // Every key of a section.
  std::vector<std::pair<std::string, std::string>> section(const std::string& section);

  // Throws on sections or keys outside `allowed`. Sections in `open` accept
  // any key.
  void check_keys(const std::map<std::string, std::set<std::string>>& allowed,
                  const std::set<std::string>& open) const;

  // FNV-1a of the raw file bytes.
  std::uint64_t hash() const noexcept { return hash_; }

 private:
  boost::property_tree::ptree tree_;
  std::filesystem::path base_dir_;
  std::uint64_t hash_ = 0;
};

}  // namespace genens::cli
