#include "fogsched/format.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>

namespace fogsched {

std::string format_number(double x) {
  if (std::isnan(x)) return "nan";
  if (std::isinf(x)) return x > 0 ? "inf" : "-inf";
  if (x == 0) return "0.00000";
  const int exponent = static_cast<int>(std::floor(std::log10(std::fabs(x))));
  const int decimals = std::max(0, 5 - exponent);
  char buf[400];
  std::snprintf(buf, sizeof buf, "%.*f", decimals, x);
  std::string s = buf;
  if (s.find_first_not_of("-0.") == std::string::npos) s = "0.00000";
  return s;
}

}  // namespace fogsched
