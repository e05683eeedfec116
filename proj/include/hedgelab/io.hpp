#pragma once
#include <filesystem>
#include <string>
#include <string_view>
#include <vector>

namespace hedgelab::io {

// Shortest decimal representation that parses back to the identical double.
// All CSV/checkpoint output goes through this so artifacts round-trip exactly.
std::string format_double(double v);

// Strict full-string parses; throw io_error naming the offending token.
double parse_double(std::string_view s);
long long parse_int(std::string_view s);
uint64_t parse_uint(std::string_view s);

std::vector<std::string_view> split(std::string_view line, char sep);

std::string read_file(const std::filesystem::path& p);
void write_file(const std::filesystem::path& p, std::string_view content);

}  // namespace hedgelab::io
