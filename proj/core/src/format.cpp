#include "sparfima/format.hpp"

#include <cmath>
#include <cstdio>

namespace sparfima {

std::string format_number(double value) {
  if (std::isnan(value)) return "NA";
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.17g", value);
  return buf;
}

}  // namespace sparfima
