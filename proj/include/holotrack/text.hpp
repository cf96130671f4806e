#pragma once

#include <filesystem>
#include <istream>
#include <string>
#include <string_view>
#include <vector>

namespace holotrack {

std::string_view trim(std::string_view s);
std::vector<std::string> split_ws(std::string_view s);

/// Locale-independent number parsing; throws ConfigError naming `what`.
double parse_double(std::string_view s, std::string_view what);
long long parse_int(std::string_view s, std::string_view what);
bool parse_bool(std::string_view s, std::string_view what);

/// Shortest round-trip decimal representation ("nan" for NaN).
std::string format_double(double v);
/// Fixed notation with `digits` decimals.
std::string format_fixed(double v, int digits);

struct KeyValue {
  std::string key;
  std::string value;
  int line = 0;
};

/// `key = value` lines; blank lines and text after '#' are ignored.
std::vector<KeyValue> read_key_values(std::istream& in);

/// Writes a whole file or throws DataError.
void write_text(const std::filesystem::path& path, const std::string& content);

}  // namespace holotrack
