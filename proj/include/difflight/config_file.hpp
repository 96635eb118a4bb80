#pragma once

#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace difflight {

// Flat "key = value" document. '#' starts a comment; blank lines are ignored.
// Keys are dotted names ("eo_tune.latency"); values are kept as raw text and
// interpreted by whoever consumes the key.
class ConfigFile {
 public:
  static ConfigFile parse(std::string_view text, std::string_view origin = "<string>");
  static ConfigFile load(const std::filesystem::path& path);

  bool contains(std::string_view key) const;
  std::optional<std::string> get(std::string_view key) const;
  const std::map<std::string, std::string, std::less<>>& entries() const { return entries_; }
  const std::string& origin() const { return origin_; }

  // Marks keys as understood; unknown_keys() reports the rest so typos surface.
  void mark_used(std::string_view key) const;
  std::vector<std::string> unknown_keys() const;

  // Comma separated list value, each element trimmed.
  static std::vector<std::string> split_list(std::string_view value);

 private:
  std::map<std::string, std::string, std::less<>> entries_;
  mutable std::map<std::string, bool, std::less<>> used_;
  std::string origin_;
};

}  // namespace difflight
