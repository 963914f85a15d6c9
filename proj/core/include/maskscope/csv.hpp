#pragma once

#include <string>
#include <string_view>
#include <vector>

namespace maskscope::csv {

// Quotes a field when it contains a comma, quote or newline.
std::string field(std::string_view text);

// Shortest representation that round-trips through strtod.
std::string number(double value);

// Splits one CSV line, honouring quoted fields.
std::vector<std::string> split_line(std::string_view line);

}  // namespace maskscope::csv
