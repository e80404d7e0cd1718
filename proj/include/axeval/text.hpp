#pragma once

#include <string>
#include <string_view>

// Small string helpers shared by the parsers and loaders.
namespace axeval::text {

std::string_view trim(std::string_view s);
std::string to_lower(std::string_view s);
bool iequals(std::string_view a, std::string_view b);
bool istarts_with(std::string_view s, std::string_view prefix);
bool is_blank(std::string_view s);

}  // namespace axeval::text
