#pragma once

#include <filesystem>
#include <optional>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

namespace oareco {

/// Ordered `key = value` text document used by metadata, architecture and
/// report sidecars. Blank lines and lines starting with '#' are ignored.
class KeyValueMap {
 public:
  static KeyValueMap parse(std::string_view text);
  static KeyValueMap load(const std::filesystem::path& path);

  void set(const std::string& key, const std::string& value);
  void set(const std::string& key, double value);  // round-trippable formatting
  void set(const std::string& key, long long value);

  bool contains(const std::string& key) const;
  std::optional<std::string> find(const std::string& key) const;
  const std::string& get(const std::string& key) const;  // throws InvalidInput when absent
  double get_double(const std::string& key) const;
  long long get_int(const std::string& key) const;
  double get_double_or(const std::string& key, double fallback) const;

  /// Throws InvalidInput naming the first key not in `allowed`.
  void require_known(const std::vector<std::string_view>& allowed) const;

  const std::vector<std::pair<std::string, std::string>>& entries() const noexcept { return entries_; }

  std::string to_string() const;
  void save(const std::filesystem::path& path) const;

 private:
  std::vector<std::pair<std::string, std::string>> entries_;
};

/// Shortest decimal text that parses back to exactly `value`.
std::string format_double(double value);

}  // namespace oareco
