#pragma once

#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "pencil/grid.hpp"

namespace pencil {

std::uint64_t fnv1a64(std::string_view bytes);
// 16 lowercase hex digits.
std::string hex64(std::uint64_t v);

struct Column {
  std::string name;
  const Field* values;
};

// Header lines as "# " comments, then R1..Rn and the columns with 17
// significant digits, LF line endings.
std::string grid_csv(const Chart& chart, std::span<const Column> columns, std::string_view header);

// Creates parent directories; throws ConfigError when the file cannot be written.
void write_file(const std::filesystem::path& path, std::string_view content);

}  // namespace pencil
