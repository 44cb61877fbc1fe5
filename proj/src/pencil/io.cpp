#include "pencil/io.hpp"

#include <fstream>

#include "pencil/errors.hpp"
#include "pencil/format.hpp"

namespace pencil {

std::uint64_t fnv1a64(std::string_view bytes) {
  std::uint64_t h = 14695981039346656037ull;
  for (unsigned char c : bytes) {
    h ^= c;
    h *= 1099511628211ull;
  }
  return h;
}

std::string hex64(std::uint64_t v) {
  static const char* digits = "0123456789abcdef";
  std::string s(16, '0');
  for (int i = 15; i >= 0; --i, v >>= 4) s[static_cast<std::size_t>(i)] = digits[v & 15u];
  return s;
}

namespace {

void comment_lines(std::string& out, std::string_view header) {
  std::size_t start = 0;
  while (start <= header.size()) {
    std::size_t end = header.find('\n', start);
    if (end == std::string_view::npos) end = header.size();
    out += "# ";
    out += header.substr(start, end - start);
    out += '\n';
    start = end + 1;
  }
}

}  // namespace

std::string grid_csv(const Chart& chart, std::span<const Column> columns, std::string_view header) {
  for (const auto& c : columns) {
    if (c.values->size() != chart.size()) throw ConfigError("column '" + c.name + "' does not match the chart");
  }
  std::string out;
  if (!header.empty()) comment_lines(out, header);
  for (int k = 0; k < chart.dim(); ++k) {
    if (k) out += ',';
    out += "R" + std::to_string(k + 1);
  }
  for (const auto& c : columns) out += "," + c.name;
  out += '\n';
  std::vector<double> x(static_cast<std::size_t>(chart.dim()));
  for (std::size_t q = 0; q < chart.size(); ++q) {
    chart.point(q, x);
    for (std::size_t k = 0; k < x.size(); ++k) {
      if (k) out += ',';
      out += format_exact(x[k]);
    }
    for (const auto& c : columns) out += "," + format_exact((*c.values)[q]);
    out += '\n';
  }
  return out;
}

void write_file(const std::filesystem::path& path, std::string_view content) {
  std::error_code ec;
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path(), ec);
  std::ofstream f(path, std::ios::binary | std::ios::trunc);
  if (!f) throw ConfigError("cannot write " + path.string());
  f.write(content.data(), static_cast<std::streamsize>(content.size()));
  if (!f) throw ConfigError("cannot write " + path.string());
}

}  // namespace pencil
