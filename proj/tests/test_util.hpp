#pragma once

#include <string>

#include "rlcs/random.hpp"
#include "rlcs/text.hpp"

namespace testutil {

inline std::string random_string(rlcs::Rng& rng, std::u32string_view alphabet, std::size_t max_len) {
    std::u32string s;
    const auto len = rlcs::uniform_index(rng, max_len + 1);
    for (std::uint64_t i = 0; i < len; ++i) s.push_back(alphabet[rlcs::uniform_index(rng, alphabet.size())]);
    return rlcs::text::encode_utf8(s);
}

inline std::string source_path(const std::string& rel) { return std::string(RLCS_SOURCE_DIR) + "/" + rel; }

}  // namespace testutil
