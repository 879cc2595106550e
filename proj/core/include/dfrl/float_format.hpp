#pragma once

#include <optional>
#include <string>
#include <string_view>

namespace dfrl {

/// Shortest decimal text that parses back to the identical 64-bit double.
std::string format_double(double value);

/// Parses the whole of `text` as a double; nullopt on any trailing garbage.
std::optional<double> parse_double(std::string_view text);

}  // namespace dfrl
