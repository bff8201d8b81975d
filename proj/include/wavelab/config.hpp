#pragma once

// Flat "key = value" run configurations. Lists are comma separated, '#' starts
// a comment. Every subcommand has a schema of known keys with defaults; the
// echo lists every resolved key in sorted order and can be read back.

#include <cstdint>
#include <map>
#include <string>
#include <string_view>
#include <vector>

namespace wavelab {

struct KeySpec {
  std::string key;
  std::string default_value;
  std::string help;
};

class Config {
 public:
  static Config parse(std::string_view text, const std::string& origin = "<text>");
  static Config load(const std::string& path);

  void set(const std::string& key, const std::string& value) { entries_[key] = value; }
  void merge(const Config& other);
  bool has(const std::string& key) const { return entries_.count(key) > 0; }

  // Fills missing keys from the schema and rejects keys outside it.
  void resolve(const std::vector<KeySpec>& schema);

  const std::string& text(const std::string& key) const;
  double number(const std::string& key) const;
  long long integer(const std::string& key) const;
  std::uint64_t unsigned_integer(const std::string& key) const;
  bool flag(const std::string& key) const;
  std::vector<double> numbers(const std::string& key) const;

  std::string echo() const;
  std::uint64_t hash() const;
  const std::map<std::string, std::string>& entries() const { return entries_; }

 private:
  std::map<std::string, std::string> entries_;
};

// "key=value" as given to --set.
std::pair<std::string, std::string> split_assignment(const std::string& assignment);

}  // namespace wavelab
