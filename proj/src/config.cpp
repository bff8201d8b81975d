#include "wavelab/config.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <set>
#include <sstream>

#include "wavelab/errors.hpp"
#include "wavelab/io.hpp"

namespace wavelab {

namespace {

std::string trim(std::string_view s) {
  const auto first = s.find_first_not_of(" \t\r");
  if (first == std::string_view::npos) return {};
  const auto last = s.find_last_not_of(" \t\r");
  return std::string(s.substr(first, last - first + 1));
}

bool valid_key(const std::string& key) {
  return !key.empty() && std::all_of(key.begin(), key.end(), [](char c) {
    return std::isalnum(static_cast<unsigned char>(c)) || c == '_';
  });
}

double parse_number(const std::string& key, const std::string& value) {
  std::size_t used = 0;
  double out = 0.0;
  try {
    out = std::stod(value, &used);
  } catch (const std::exception&) {
    used = 0;
  }
  if (used == 0 || used != value.size() || !std::isfinite(out))
    throw InvalidArgument("key '" + key + "' expects a finite number, got '" + value + "'");
  return out;
}

}  // namespace

Config Config::parse(std::string_view text, const std::string& origin) {
  Config c;
  std::istringstream in{std::string(text)};
  std::string line;
  int number = 0;
  while (std::getline(in, line)) {
    ++number;
    const auto hash = line.find('#');
    const std::string body = trim(hash == std::string::npos ? line : line.substr(0, hash));
    if (body.empty()) continue;
    const auto eq = body.find('=');
    if (eq == std::string::npos)
      throw InvalidArgument(origin + ":" + std::to_string(number) + ": expected key = value");
    const std::string key = trim(body.substr(0, eq));
    if (!valid_key(key))
      throw InvalidArgument(origin + ":" + std::to_string(number) + ": bad key '" + key + "'");
    if (c.has(key))
      throw InvalidArgument(origin + ":" + std::to_string(number) + ": duplicate key '" + key + "'");
    c.set(key, trim(body.substr(eq + 1)));
  }
  return c;
}

Config Config::load(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw InvalidArgument("cannot read config file " + path);
  std::stringstream buf;
  buf << in.rdbuf();
  return parse(buf.str(), path);
}

void Config::merge(const Config& other) {
  for (const auto& [k, v] : other.entries_) entries_[k] = v;
}

void Config::resolve(const std::vector<KeySpec>& schema) {
  std::set<std::string> known;
  for (const auto& s : schema) {
    known.insert(s.key);
    if (!has(s.key)) entries_[s.key] = s.default_value;
  }
  for (const auto& [k, v] : entries_)
    if (!known.count(k)) throw InvalidArgument("unknown config key '" + k + "'");
}

const std::string& Config::text(const std::string& key) const {
  const auto it = entries_.find(key);
  if (it == entries_.end()) throw InvalidArgument("missing config key '" + key + "'");
  return it->second;
}

double Config::number(const std::string& key) const { return parse_number(key, text(key)); }

long long Config::integer(const std::string& key) const {
  const std::string& v = text(key);
  std::size_t used = 0;
  long long out = 0;
  try {
    out = std::stoll(v, &used);
  } catch (const std::exception&) {
    used = 0;
  }
  if (used == 0 || used != v.size())
    throw InvalidArgument("key '" + key + "' expects an integer, got '" + v + "'");
  return out;
}

std::uint64_t Config::unsigned_integer(const std::string& key) const {
  const std::string& v = text(key);
  std::size_t used = 0;
  unsigned long long out = 0;
  try {
    if (!v.empty() && v[0] != '-') out = std::stoull(v, &used);
  } catch (const std::exception&) {
    used = 0;
  }
  if (used == 0 || used != v.size())
    throw InvalidArgument("key '" + key + "' expects a non-negative integer, got '" + v + "'");
  return out;
}

bool Config::flag(const std::string& key) const {
  const std::string& v = text(key);
  if (v == "true" || v == "1" || v == "yes") return true;
  if (v == "false" || v == "0" || v == "no") return false;
  throw InvalidArgument("key '" + key + "' expects true or false, got '" + v + "'");
}

std::vector<double> Config::numbers(const std::string& key) const {
  std::vector<double> out;
  const std::string& v = text(key);
  if (trim(v).empty()) return out;
  std::stringstream in(v);
  std::string item;
  while (std::getline(in, item, ',')) out.push_back(parse_number(key, trim(item)));
  return out;
}

std::string Config::echo() const {
  std::string out;
  for (const auto& [k, v] : entries_) out += k + " = " + v + "\n";
  return out;
}

std::uint64_t Config::hash() const { return fnv1a(echo()); }

std::pair<std::string, std::string> split_assignment(const std::string& assignment) {
  const auto eq = assignment.find('=');
  if (eq == std::string::npos) throw InvalidArgument("expected key=value, got '" + assignment + "'");
  const std::string key = trim(assignment.substr(0, eq));
  if (!valid_key(key)) throw InvalidArgument("bad key '" + key + "'");
  return {key, trim(assignment.substr(eq + 1))};
}

}  // namespace wavelab
