#pragma once

#include <string>

namespace fogsched {

// Fixed decimal notation with six significant digits: 1234.57, 0.0123457,
// 1234567. Non-finite values print as nan, inf, -inf.
std::string format_number(double x);

}  // namespace fogsched
