#pragma once

#include <string>

namespace pencil {

// Shortest round-trip decimal form of v ("0.75", "3", "1e-08").
std::string format_number(double v);
// printf "%.17g".
std::string format_exact(double v);

}  // namespace pencil
