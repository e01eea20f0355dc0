#pragma once

#include <optional>
#include <string>
#include <string_view>

namespace condsql {

std::string trim(std::string_view s);
std::string casefold(std::string_view s);

// trim + case-fold + collapse internal whitespace runs to one space.
std::string normalize(std::string_view s);

// Whole-string decimal parse after trimming. Rejects inf/nan and trailing junk.
std::optional<double> parse_number(std::string_view s);

// Shortest round-trip decimal form; integral values print without a fraction.
std::string format_number(double v);

// Comparison key for a condition value: canonical number when the column is
// numeric and the value parses, normalized text otherwise.
std::string canonical_value(std::string_view value, bool numeric_column);

}  // namespace condsql
