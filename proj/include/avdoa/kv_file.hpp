#pragma once

#include <filesystem>
#include <map>
#include <string>
#include <vector>

namespace avdoa {

// Plain "key = value" text, one entry per line, '#' starts a comment.
// Values are kept as strings; typed getters parse on demand.
class KeyValueFile {
 public:
  KeyValueFile() = default;

  static KeyValueFile parse(const std::string& text);
  static KeyValueFile load(const std::filesystem::path& path);

  bool has(const std::string& key) const { return entries_.count(key) > 0; }
  const std::string& get(const std::string& key) const;

  double get_double(const std::string& key) const;
  double get_double(const std::string& key, double fallback) const;
  long long get_int(const std::string& key) const;
  long long get_int(const std::string& key, long long fallback) const;
  std::string get_string(const std::string& key, const std::string& fallback) const;
  std::vector<double> get_doubles(const std::string& key) const;

  void set(const std::string& key, const std::string& value) { entries_[key] = value; }
  const std::map<std::string, std::string>& entries() const { return entries_; }

  std::string to_string() const;

 private:
  std::map<std::string, std::string> entries_;
};

}  // namespace avdoa
