#include "difflight/config_file.hpp"

#include <fstream>
#include <sstream>

#include "difflight/error.hpp"

namespace difflight {

namespace {

std::string_view trim(std::string_view s) {
  while (!s.empty() && (s.front() == ' ' || s.front() == '\t')) s.remove_prefix(1);
  while (!s.empty() && (s.back() == ' ' || s.back() == '\t' || s.back() == '\r')) s.remove_suffix(1);
  return s;
}

}  // namespace

ConfigFile ConfigFile::parse(std::string_view text, std::string_view origin) {
  ConfigFile cfg;
  cfg.origin_ = std::string(origin);
  std::size_t line_no = 0;
  while (!text.empty()) {
    ++line_no;
    std::size_t nl = text.find('\n');
    std::string_view line = text.substr(0, nl);
    text = nl == std::string_view::npos ? std::string_view{} : text.substr(nl + 1);

    if (auto hash = line.find('#'); hash != std::string_view::npos) line = line.substr(0, hash);
    line = trim(line);
    if (line.empty()) continue;

    auto eq = line.find('=');
    if (eq == std::string_view::npos) {
      throw SchemaError(cfg.origin_ + ":" + std::to_string(line_no) + ": expected 'key = value'");
    }
    std::string key(trim(line.substr(0, eq)));
    std::string value(trim(line.substr(eq + 1)));
    if (key.empty()) throw SchemaError(cfg.origin_ + ":" + std::to_string(line_no) + ": empty key");
    if (cfg.entries_.count(key)) {
      throw SchemaError(cfg.origin_ + ":" + std::to_string(line_no) + ": duplicate key '" + key + "'");
    }
    cfg.entries_.emplace(std::move(key), std::move(value));
  }
  return cfg;
}

ConfigFile ConfigFile::load(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw SchemaError("cannot open config file '" + path.string() + "'");
  std::stringstream ss;
  ss << in.rdbuf();
  return parse(ss.str(), path.string());
}

bool ConfigFile::contains(std::string_view key) const { return entries_.find(key) != entries_.end(); }

std::optional<std::string> ConfigFile::get(std::string_view key) const {
  auto it = entries_.find(key);
  if (it == entries_.end()) return std::nullopt;
  mark_used(key);
  return it->second;
}

void ConfigFile::mark_used(std::string_view key) const { used_[std::string(key)] = true; }

std::vector<std::string> ConfigFile::unknown_keys() const {
  std::vector<std::string> out;
  for (const auto& [k, v] : entries_) {
    if (!used_.count(k)) out.push_back(k);
  }
  return out;
}

std::vector<std::string> ConfigFile::split_list(std::string_view value) {
  std::vector<std::string> out;
  while (true) {
    auto comma = value.find(',');
    auto item = trim(value.substr(0, comma));
    if (!item.empty()) out.emplace_back(item);
    if (comma == std::string_view::npos) break;
    value = value.substr(comma + 1);
  }
  return out;
}

}  // namespace difflight
