#pragma once

#include <string>

namespace attent {

/// Shortest decimal form that round-trips the exact double value.
std::string format_double(double x);

}  // namespace attent
