#include "wsod/config.hpp"

#include <cstdlib>
#include <fstream>

#include "wsod/error.hpp"

namespace wsod {

namespace {

std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r\n");
  if (b == std::string::npos) return "";
  const auto e = s.find_last_not_of(" \t\r\n");
  return s.substr(b, e - b + 1);
}

}  // namespace

std::map<std::string, std::string> parse_kv_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ValidationError("cannot open config file '" + path + "'");
  std::map<std::string, std::string> kv;
  std::string line;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    const auto hash = line.find('#');
    if (hash != std::string::npos) line.erase(hash);
    const std::string t = trim(line);
    if (t.empty()) continue;
    const auto eq = t.find('=');
    if (eq == std::string::npos) {
      throw ValidationError(path + ":" + std::to_string(lineno) +
                            ": expected 'key = value'");
    }
    const std::string key = trim(t.substr(0, eq));
    const std::string value = trim(t.substr(eq + 1));
    if (key.empty()) {
      throw ValidationError(path + ":" + std::to_string(lineno) + ": empty key");
    }
    if (!kv.emplace(key, value).second) {
      throw ValidationError(path + ":" + std::to_string(lineno) +
                            ": duplicate key '" + key + "'");
    }
  }
  return kv;
}

KvReader::KvReader(const std::string& path) : path_(path), kv_(parse_kv_file(path)) {}

std::string KvReader::raw(const std::string& key) {
  used_.insert(key);
  return kv_.at(key);
}

std::string KvReader::get_string(const std::string& key, const std::string& def) {
  if (!has(key)) return def;
  return raw(key);
}

int KvReader::get_int(const std::string& key, int def) {
  if (!has(key)) return def;
  const std::string v = raw(key);
  char* end = nullptr;
  const long x = std::strtol(v.c_str(), &end, 10);
  if (end == v.c_str() || *end != '\0') {
    throw ValidationError(path_ + ": key '" + key + "': expected integer, got '" + v + "'");
  }
  return static_cast<int>(x);
}

double KvReader::get_double(const std::string& key, double def) {
  if (!has(key)) return def;
  const std::string v = raw(key);
  char* end = nullptr;
  const double x = std::strtod(v.c_str(), &end);
  if (end == v.c_str() || *end != '\0') {
    throw ValidationError(path_ + ": key '" + key + "': expected number, got '" + v + "'");
  }
  return x;
}

bool KvReader::get_bool(const std::string& key, bool def) {
  if (!has(key)) return def;
  const std::string v = raw(key);
  if (v == "true" || v == "1") return true;
  if (v == "false" || v == "0") return false;
  throw ValidationError(path_ + ": key '" + key + "': expected true/false, got '" + v + "'");
}

std::uint64_t KvReader::get_u64(const std::string& key, std::uint64_t def) {
  if (!has(key)) return def;
  const std::string v = raw(key);
  char* end = nullptr;
  const unsigned long long x = std::strtoull(v.c_str(), &end, 10);
  if (end == v.c_str() || *end != '\0') {
    throw ValidationError(path_ + ": key '" + key + "': expected unsigned integer, got '" +
                          v + "'");
  }
  return static_cast<std::uint64_t>(x);
}

void KvReader::finish() const {
  for (const auto& [key, value] : kv_) {
    if (!used_.count(key)) {
      throw ValidationError(path_ + ": unknown key '" + key + "'");
    }
  }
}

}  // namespace wsod
