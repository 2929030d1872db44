#include "hoidet/text_io.hpp"

#include <charconv>
#include <cmath>
#include <fstream>
#include <sstream>

#include "hoidet/errors.hpp"

namespace hoidet::text {

std::string format_double(double value) {
  char buf[64];
  auto [end, ec] = std::to_chars(buf, buf + sizeof(buf), value);
  if (ec != std::errc{}) throw std::runtime_error("format_double: to_chars failed");
  return {buf, end};
}

double parse_double(std::string_view field, std::string_view context) {
  double value = 0.0;
  const char* first = field.data();
  const char* last = field.data() + field.size();
  if (!field.empty() && *first == '+') ++first;
  auto [ptr, ec] = std::from_chars(first, last, value);
  if (ec != std::errc{} || ptr != last || field.empty() || !std::isfinite(value)) {
    throw ParseError(std::string(context) + ": expected a finite number, got '" +
                     std::string(field) + "'");
  }
  return value;
}

std::int64_t parse_int(std::string_view field, std::string_view context) {
  std::int64_t value = 0;
  auto [ptr, ec] = std::from_chars(field.data(), field.data() + field.size(), value);
  if (ec != std::errc{} || ptr != field.data() + field.size() || field.empty()) {
    throw ParseError(std::string(context) + ": expected an integer, got '" +
                     std::string(field) + "'");
  }
  return value;
}

std::vector<std::string_view> split(std::string_view line, char sep) {
  std::vector<std::string_view> out;
  std::size_t start = 0;
  while (true) {
    const auto pos = line.find(sep, start);
    if (pos == std::string_view::npos) {
      out.push_back(line.substr(start));
      return out;
    }
    out.push_back(line.substr(start, pos - start));
    start = pos + 1;
  }
}

std::string format_box(const BBox& box) {
  return format_double(box.x1) + "," + format_double(box.y1) + "," + format_double(box.x2) +
         "," + format_double(box.y2);
}

BBox parse_box(std::string_view field, std::string_view context) {
  const auto parts = split(field, ',');
  if (parts.size() != 4) {
    throw ParseError(std::string(context) + ": expected box 'x1,y1,x2,y2', got '" +
                     std::string(field) + "'");
  }
  return {parse_double(parts[0], context), parse_double(parts[1], context),
          parse_double(parts[2], context), parse_double(parts[3], context)};
}

std::vector<std::string> read_lines(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open " + path.string());
  std::vector<std::string> lines;
  std::string line;
  while (std::getline(in, line)) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    lines.push_back(std::move(line));
  }
  return lines;
}

void write_file(const std::filesystem::path& path, std::string_view content) {
  if (path.has_parent_path()) {
    std::error_code ec;
    std::filesystem::create_directories(path.parent_path(), ec);
  }
  auto tmp = path;
  tmp += ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw IoError("cannot write " + path.string());
    out.write(content.data(), static_cast<std::streamsize>(content.size()));
    if (!out) throw IoError("short write to " + path.string());
  }
  std::error_code ec;
  std::filesystem::rename(tmp, path, ec);
  if (ec) throw IoError("cannot rename into " + path.string() + ": " + ec.message());
}

void expect_header(const std::vector<std::string>& lines, std::string_view header,
                   const std::filesystem::path& path) {
  if (lines.empty() || lines.front() != header) {
    throw ParseError(where(path, 1, "expected header '" + std::string(header) + "'"));
  }
}

std::string where(const std::filesystem::path& path, std::size_t line_no,
                  std::string_view what) {
  std::ostringstream os;
  os << path.string() << ":" << line_no << ": " << what;
  return os.str();
}

}  // namespace hoidet::text
