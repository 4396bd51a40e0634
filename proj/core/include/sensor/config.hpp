#pragma once

#include <map>
#include <set>
#include <string>
#include <vector>

namespace sensor {

/// `key = value` config file: one pair per line, `#` starts a comment,
/// blank lines ignored. Keys are namespaced with dots (env.resolution, ...).
class KeyValueConfig {
 public:
  KeyValueConfig() = default;

  static KeyValueConfig from_file(const std::string& path);
  static KeyValueConfig from_string(const std::string& text, const std::string& origin = "<string>");

  void set(const std::string& key, const std::string& value);
  bool has(const std::string& key) const;

  std::string get_string(const std::string& key, const std::string& fallback) const;
  double get_double(const std::string& key, double fallback) const;
  int get_int(const std::string& key, int fallback) const;
  bool get_bool(const std::string& key, bool fallback) const;
  std::uint64_t get_u64(const std::string& key, std::uint64_t fallback) const;

  /// Keys present in the file but never read by any getter; used to reject
  /// misspelled configuration.
  std::vector<std::string> unused_keys() const;

 private:
  std::map<std::string, std::string> values_;
  mutable std::set<std::string> accessed_;
  std::string origin_ = "<empty>";
};

}  // namespace sensor
