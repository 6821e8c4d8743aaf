#pragma once

// Small helpers shared by the text formats.

#include <charconv>
#include <istream>
#include <string>
#include <string_view>
#include <system_error>
#include <vector>

#include "aggnet/errors.hpp"

namespace aggnet::text {

// Shortest representation that parses back to the same double.
inline std::string format_double(double v) {
  char buf[64];
  auto [ptr, ec] = std::to_chars(buf, buf + sizeof(buf), v);
  if (ec != std::errc{}) throw error("format_double: conversion failed");
  return std::string(buf, ptr);
}

inline std::vector<std::string_view> split_ws(std::string_view line) {
  std::vector<std::string_view> out;
  std::size_t i = 0;
  while (i < line.size()) {
    while (i < line.size() && (line[i] == ' ' || line[i] == '\t' || line[i] == '\r')) ++i;
    std::size_t j = i;
    while (j < line.size() && line[j] != ' ' && line[j] != '\t' && line[j] != '\r') ++j;
    if (j > i) out.push_back(line.substr(i, j - i));
    i = j;
  }
  return out;
}

template <class T>
T parse_number(std::string_view s, const char* what) {
  T v{};
  auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (ec != std::errc{} || ptr != s.data() + s.size())
    throw invalid_input(std::string("cannot parse ") + what + " from '" + std::string(s) + "'");
  return v;
}

// Next line that is neither blank nor a '#' comment. Returns false at EOF.
inline bool next_record(std::istream& in, std::string& line) {
  while (std::getline(in, line)) {
    auto f = line.find_first_not_of(" \t\r");
    if (f == std::string::npos || line[f] == '#') continue;
    return true;
  }
  return false;
}

}  // namespace aggnet::text
