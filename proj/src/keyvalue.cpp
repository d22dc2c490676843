#include "oareco/keyvalue.hpp"

#include <algorithm>
#include <charconv>
#include <fstream>
#include <sstream>

#include "oareco/error.hpp"

namespace oareco {

namespace {

std::string_view trim(std::string_view s) {
  const auto first = s.find_first_not_of(" \t\r");
  if (first == std::string_view::npos) return {};
  const auto last = s.find_last_not_of(" \t\r");
  return s.substr(first, last - first + 1);
}

}  // namespace

std::string format_double(double value) {
  char buf[64];
  const auto res = std::to_chars(buf, buf + sizeof(buf), value);
  return std::string(buf, res.ptr);
}

KeyValueMap KeyValueMap::parse(std::string_view text) {
  KeyValueMap map;
  std::size_t line_no = 0;
  while (!text.empty()) {
    const auto nl = text.find('\n');
    std::string_view line = text.substr(0, nl);
    text = nl == std::string_view::npos ? std::string_view{} : text.substr(nl + 1);
    ++line_no;
    line = trim(line);
    if (line.empty() || line.front() == '#') continue;
    const auto eq = line.find('=');
    if (eq == std::string_view::npos) {
      throw InvalidInput("line " + std::to_string(line_no) + ": expected 'key = value'");
    }
    const std::string key(trim(line.substr(0, eq)));
    if (key.empty()) throw InvalidInput("line " + std::to_string(line_no) + ": empty key");
    if (map.contains(key)) throw InvalidInput("duplicate key '" + key + "'");
    map.entries_.emplace_back(key, std::string(trim(line.substr(eq + 1))));
  }
  return map;
}

KeyValueMap KeyValueMap::load(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw InvalidInput("cannot open " + path.string());
  std::stringstream ss;
  ss << in.rdbuf();
  return parse(ss.str());
}

void KeyValueMap::set(const std::string& key, const std::string& value) {
  auto it = std::find_if(entries_.begin(), entries_.end(), [&](const auto& e) { return e.first == key; });
  if (it == entries_.end()) {
    entries_.emplace_back(key, value);
  } else {
    it->second = value;
  }
}

void KeyValueMap::set(const std::string& key, double value) { set(key, format_double(value)); }

void KeyValueMap::set(const std::string& key, long long value) { set(key, std::to_string(value)); }

bool KeyValueMap::contains(const std::string& key) const { return find(key).has_value(); }

std::optional<std::string> KeyValueMap::find(const std::string& key) const {
  for (const auto& [k, v] : entries_) {
    if (k == key) return v;
  }
  return std::nullopt;
}

const std::string& KeyValueMap::get(const std::string& key) const {
  for (const auto& [k, v] : entries_) {
    if (k == key) return v;
  }
  throw InvalidInput("missing key '" + key + "'");
}

double KeyValueMap::get_double(const std::string& key) const {
  const std::string& raw = get(key);
  double value = 0.0;
  const auto res = std::from_chars(raw.data(), raw.data() + raw.size(), value);
  if (res.ec != std::errc{} || res.ptr != raw.data() + raw.size()) {
    throw InvalidInput("key '" + key + "' is not a number: '" + raw + "'");
  }
  return value;
}

long long KeyValueMap::get_int(const std::string& key) const {
  const std::string& raw = get(key);
  long long value = 0;
  const auto res = std::from_chars(raw.data(), raw.data() + raw.size(), value);
  if (res.ec != std::errc{} || res.ptr != raw.data() + raw.size()) {
    throw InvalidInput("key '" + key + "' is not an integer: '" + raw + "'");
  }
  return value;
}

double KeyValueMap::get_double_or(const std::string& key, double fallback) const {
  return contains(key) ? get_double(key) : fallback;
}

void KeyValueMap::require_known(const std::vector<std::string_view>& allowed) const {
  for (const auto& [k, v] : entries_) {
    if (std::find(allowed.begin(), allowed.end(), k) == allowed.end()) {
      throw InvalidInput("unknown key '" + k + "'");
    }
  }
}

std::string KeyValueMap::to_string() const {
  std::string out;
  for (const auto& [k, v] : entries_) out += k + " = " + v + "\n";
  return out;
}

void KeyValueMap::save(const std::filesystem::path& path) const {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw InvalidInput("cannot write " + path.string());
  out << to_string();
}

}  // namespace oareco
