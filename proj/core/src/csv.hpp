#pragma once

#include <istream>
#include <string>
#include <string_view>
#include <vector>

namespace mwd::detail {

/// Splits one CSV record. Handles double-quoted fields with "" escapes.
std::vector<std::string> split_csv_line(std::string_view line);

/// Reads the next non-empty line, stripping a trailing '\r'. Returns false at EOF.
bool read_csv_line(std::istream& in, std::string& line);

/// Strict decimal parse of a whole cell. Returns false on junk or trailing text.
bool parse_double(std::string_view text, double& out);

std::string_view trim(std::string_view s);

}  // namespace mwd::detail
