#include "pencil/format.hpp"

#include <charconv>
#include <cstdio>

namespace pencil {

std::string format_number(double v) {
  char buf[64];
  auto res = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, res.ptr);
}

std::string format_exact(double v) {
  char buf[64];
  int len = std::snprintf(buf, sizeof buf, "%.17g", v);
  return std::string(buf, static_cast<std::size_t>(len));
}

}  // namespace pencil
