#pragma once

#include <string>
#include <string_view>
#include <vector>

namespace stancekit::text {

std::string_view trim(std::string_view s);
std::string to_lower(std::string_view s);
std::vector<std::string_view> split_whitespace(std::string_view s);
bool iequals(std::string_view a, std::string_view b);

/// Lowercases the first character when it is ASCII; multi-byte leads are left alone.
std::string lower_first(std::string_view s);

std::string sha256_hex(std::string_view data);

}  // namespace stancekit::text
