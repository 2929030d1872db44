#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <string_view>
#include <vector>

#include "hoidet/geometry.hpp"

namespace hoidet::text {

/// Shortest decimal representation that parses back to the same double.
[[nodiscard]] std::string format_double(double value);

/// Strict parse of a complete decimal field. Throws ParseError with `context`.
[[nodiscard]] double parse_double(std::string_view field, std::string_view context);
[[nodiscard]] std::int64_t parse_int(std::string_view field, std::string_view context);

[[nodiscard]] std::vector<std::string_view> split(std::string_view line, char sep);

/// "x1,y1,x2,y2"
[[nodiscard]] std::string format_box(const BBox& box);
[[nodiscard]] BBox parse_box(std::string_view field, std::string_view context);

/// Reads a whole text file as lines (without terminators). Throws IoError.
[[nodiscard]] std::vector<std::string> read_lines(const std::filesystem::path& path);

/// Writes `content` atomically enough for our purposes (temp file + rename).
void write_file(const std::filesystem::path& path, std::string_view content);

/// Checks that `lines` is non-empty and starts with `header`.
void expect_header(const std::vector<std::string>& lines, std::string_view header,
                   const std::filesystem::path& path);

/// "<path>:<line>: <what>"
[[nodiscard]] std::string where(const std::filesystem::path& path, std::size_t line_no,
                                std::string_view what);

}  // namespace hoidet::text
