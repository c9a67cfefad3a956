#pragma once

#include <cstdint>
#include <map>
#include <set>
#include <string>

namespace wsod {

/// Flat key-value config file: `key = value` lines, `#` comments, blank lines
/// ignored. Duplicate keys are errors.
std::map<std::string, std::string> parse_kv_file(const std::string& path);

/// Typed access over a parsed kv file. Every key must be consumed; finish()
/// rejects unknown keys.
class KvReader {
 public:
  explicit KvReader(const std::string& path);

  bool has(const std::string& key) const { return kv_.count(key) > 0; }
  std::string get_string(const std::string& key, const std::string& def);
  int get_int(const std::string& key, int def);
  double get_double(const std::string& key, double def);
  bool get_bool(const std::string& key, bool def);
  std::uint64_t get_u64(const std::string& key, std::uint64_t def);
  void finish() const;

  const std::string& path() const { return path_; }

 private:
  std::string raw(const std::string& key);

  std::string path_;
  std::map<std::string, std::string> kv_;
  std::set<std::string> used_;
};

}  // namespace wsod
