#pragma once

#include <string>
#include <string_view>

namespace rlcs::text {

/// Decode UTF-8 into Unicode scalar values. Malformed sequences decode to U+FFFD.
std::u32string decode_utf8(std::string_view s);
std::string encode_utf8(std::u32string_view s);

std::string_view trim(std::string_view s) noexcept;

/// Trim, collapse internal whitespace runs to one space, ASCII case-fold.
std::string normalize_for_match(std::string_view s);

bool is_cjk_ideograph(char32_t c) noexcept;
bool is_latin_letter(char32_t c) noexcept;

inline bool contains(std::string_view hay, std::string_view needle) noexcept {
    return hay.find(needle) != std::string_view::npos;
}

std::size_t count_occurrences(std::string_view hay, std::string_view needle) noexcept;

}  // namespace rlcs::text
