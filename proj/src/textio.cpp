#include "poselift/textio.hpp"

#include <charconv>
#include <system_error>

namespace poselift {

std::string format_double(double value) {
  char buf[64];
  auto res = std::to_chars(buf, buf + sizeof(buf), value);
  return std::string(buf, res.ptr);
}

std::string format_int(std::int64_t value) {
  char buf[32];
  auto res = std::to_chars(buf, buf + sizeof(buf), value);
  return std::string(buf, res.ptr);
}

double parse_double(std::string_view token, const std::string& where) {
  double value = 0.0;
  auto res = std::from_chars(token.data(), token.data() + token.size(), value);
  if (res.ec != std::errc() || res.ptr != token.data() + token.size()) {
    throw ParseError(where + ": expected a real number, got '" +
                     std::string(token) + "'");
  }
  return value;
}

std::int64_t parse_int(std::string_view token, const std::string& where) {
  std::int64_t value = 0;
  auto res = std::from_chars(token.data(), token.data() + token.size(), value);
  if (res.ec != std::errc() || res.ptr != token.data() + token.size()) {
    throw ParseError(where + ": expected an integer, got '" +
                     std::string(token) + "'");
  }
  return value;
}

std::vector<std::string_view> split_tokens(std::string_view line) {
  std::vector<std::string_view> out;
  std::size_t i = 0;
  while (i < line.size()) {
    while (i < line.size() && (line[i] == ' ' || line[i] == '\t')) ++i;
    std::size_t start = i;
    while (i < line.size() && line[i] != ' ' && line[i] != '\t') ++i;
    if (i > start) out.push_back(line.substr(start, i - start));
  }
  return out;
}

int check_schema_header(std::string_view line, std::string_view stem,
                        int supported, const std::string& where) {
  if (!line.starts_with(stem)) {
    throw SchemaError(where + ": expected schema header '" +
                      std::string(stem) + "<version>', got '" +
                      std::string(line) + "'");
  }
  const int version = static_cast<int>(
      parse_int(line.substr(stem.size()), where + " (schema version)"));
  if (version < 1 || version > supported) {
    throw SchemaError(where + ": schema version " + format_int(version) +
                      " not supported (reader handles up to " +
                      format_int(supported) + ")");
  }
  return version;
}

std::uint64_t fnv1a64(std::string_view bytes) {
  std::uint64_t hash = 0xCBF29CE484222325ULL;
  for (unsigned char c : bytes) {
    hash ^= c;
    hash *= 0x100000001B3ULL;
  }
  return hash;
}

}  // namespace poselift
