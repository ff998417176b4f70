#pragma once

#include <cstdint>
#include <string>
#include <string_view>
#include <vector>

#include "poselift/error.hpp"

namespace poselift {

// Locale-independent number formatting and parsing (std::to_chars /
// std::from_chars). Doubles use the shortest representation that parses
// back to the identical bits, so text round-trips are exact.
std::string format_double(double value);
std::string format_int(std::int64_t value);

// Parse a full token; anything trailing is an error. `where` names the
// file/line for the ParseError message.
double parse_double(std::string_view token, const std::string& where);
std::int64_t parse_int(std::string_view token, const std::string& where);

// Splits on runs of spaces/tabs. Views point into `line`.
std::vector<std::string_view> split_tokens(std::string_view line);

// Validates a "<stem><N>" schema header such as "poselift.cameras.v1"
// against stem "poselift.cameras.v". Returns N. Wrong stem or a version
// newer than `supported` is a SchemaError: old readers must refuse files
// they cannot fully interpret.
int check_schema_header(std::string_view line, std::string_view stem,
                        int supported, const std::string& where);

// 64-bit FNV-1a over the bytes; the run-configuration fingerprint embedded
// in checkpoints and reports.
std::uint64_t fnv1a64(std::string_view bytes);

}  // namespace poselift
