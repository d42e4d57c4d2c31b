#pragma once

// Plain-text companions to the binary formats.
//
// Event trace: one merged event per line as "delta,origin". Empty lines and
// lines starting with '#' are ignored, so traces may carry section headers.
//
// Count table: one "name c0 c1 ..." row per line, '#' comment lines allowed.

#include <charconv>
#include <cstdint>
#include <filesystem>
#include <map>
#include <string>
#include <string_view>
#include <vector>

#include "dtsnn/detail/binary.hpp"
#include "dtsnn/error.hpp"
#include "dtsnn/merger.hpp"

namespace dtsnn {

namespace detail {

template <class Int>
Int parse_int(std::string_view text, std::size_t line_no) {
  Int v{};
  const auto* end = text.data() + text.size();
  const auto [ptr, ec] = std::from_chars(text.data(), end, v);
  if (ec != std::errc{} || ptr != end || text.empty()) {
    throw Error(ErrorCode::invariant_violation,
                "line " + std::to_string(line_no) + ": bad integer '" + std::string(text) + "'");
  }
  return v;
}

/// Calls `fn(line, line_no)` for every non-blank, non-comment line.
template <class Fn>
void for_each_line(std::string_view text, Fn&& fn) {
  std::size_t line_no = 0;
  while (!text.empty()) {
    const auto nl = text.find('\n');
    std::string_view line = text.substr(0, nl);
    text = nl == std::string_view::npos ? std::string_view{} : text.substr(nl + 1);
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.remove_suffix(1);
    if (line.empty() || line.front() == '#') continue;
    fn(line, line_no);
  }
}

inline std::string read_text(const std::filesystem::path& path) {
  const auto bytes = read_file(path);
  return {bytes.begin(), bytes.end()};
}

}  // namespace detail

inline std::string format_trace(std::span<const MergedEvent> events) {
  std::string out;
  out.reserve(events.size() * 8);
  for (const auto& e : events) {
    out += std::to_string(e.delta);
    out += ',';
    out += std::to_string(e.origin);
    out += '\n';
  }
  return out;
}

inline MergedEventStream parse_trace(std::string_view text) {
  MergedEventStream out;
  detail::for_each_line(text, [&](std::string_view line, std::size_t n) {
    const auto comma = line.find(',');
    if (comma == std::string_view::npos) {
      throw Error(ErrorCode::invariant_violation, "line " + std::to_string(n) + ": expected delta,origin");
    }
    out.push_back({detail::parse_int<Tick>(line.substr(0, comma), n),
                   detail::parse_int<SynapseIndex>(line.substr(comma + 1), n)});
  });
  return out;
}

inline MergedEventStream read_trace(const std::filesystem::path& path) {
  return parse_trace(detail::read_text(path));
}

using CountTable = std::map<std::string, std::vector<std::uint64_t>, std::less<>>;

inline CountTable parse_count_table(std::string_view text) {
  CountTable out;
  detail::for_each_line(text, [&](std::string_view line, std::size_t n) {
    std::vector<std::string_view> fields;
    while (!line.empty()) {
      const auto sp = line.find(' ');
      if (sp != 0) fields.push_back(line.substr(0, sp));
      line = sp == std::string_view::npos ? std::string_view{} : line.substr(sp + 1);
    }
    auto& row = out[std::string(fields.front())];
    for (std::size_t i = 1; i < fields.size(); ++i) row.push_back(detail::parse_int<std::uint64_t>(fields[i], n));
  });
  return out;
}

inline CountTable read_count_table(const std::filesystem::path& path) {
  return parse_count_table(detail::read_text(path));
}

}  // namespace dtsnn
