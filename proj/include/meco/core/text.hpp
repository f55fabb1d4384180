#pragma once

#include <string>
#include <string_view>

namespace meco {

std::string_view trim(std::string_view s) noexcept;

// ASCII-only lowering, for identifiers and header names.
std::string ascii_lower(std::string_view s);

// Unicode simple case folding of a UTF-8 string. Invalid sequences are
// replaced by U+FFFD.
std::string fold_case(std::string_view utf8);

// Scheme "://" authority, no whitespace.
bool is_absolute_url(std::string_view s) noexcept;

}  // namespace meco
