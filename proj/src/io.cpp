#include "hedgelab/io.hpp"

#include <charconv>
#include <fstream>
#include <sstream>

#include "hedgelab/errors.hpp"

namespace hedgelab::io {

std::string format_double(double v) {
  char buf[64];
  auto [ptr, ec] = std::to_chars(buf, buf + sizeof buf, v);
  if (ec != std::errc{}) throw io_error("format_double: conversion failed");
  return std::string(buf, ptr);
}

double parse_double(std::string_view s) {
  double v{};
  auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (ec != std::errc{} || ptr != s.data() + s.size())
    throw io_error("parse_double: bad token '" + std::string(s) + "'");
  return v;
}

long long parse_int(std::string_view s) {
  long long v{};
  auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (ec != std::errc{} || ptr != s.data() + s.size())
    throw io_error("parse_int: bad token '" + std::string(s) + "'");
  return v;
}

uint64_t parse_uint(std::string_view s) {
  uint64_t v{};
  auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (ec != std::errc{} || ptr != s.data() + s.size())
    throw io_error("parse_uint: bad token '" + std::string(s) + "'");
  return v;
}

std::vector<std::string_view> split(std::string_view line, char sep) {
  std::vector<std::string_view> out;
  size_t start = 0;
  while (true) {
    size_t pos = line.find(sep, start);
    if (pos == std::string_view::npos) {
      out.push_back(line.substr(start));
      return out;
    }
    out.push_back(line.substr(start, pos - start));
    start = pos + 1;
  }
}

std::string read_file(const std::filesystem::path& p) {
  std::ifstream f(p, std::ios::binary);
  if (!f) throw io_error("cannot open for reading: " + p.string());
  std::ostringstream ss;
  ss << f.rdbuf();
  return std::move(ss).str();
}

void write_file(const std::filesystem::path& p, std::string_view content) {
  std::ofstream f(p, std::ios::binary | std::ios::trunc);
  if (!f) throw io_error("cannot open for writing: " + p.string());
  f.write(content.data(), std::streamsize(content.size()));
  if (!f) throw io_error("short write: " + p.string());
}

}  // namespace hedgelab::io
