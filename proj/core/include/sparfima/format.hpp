#pragma once

#include <string>

namespace sparfima {

// Decimal rendering used by every text output: 17 significant digits
// (%.17g), so values survive a write/read round trip bit for bit.
std::string format_number(double value);

}  // namespace sparfima
