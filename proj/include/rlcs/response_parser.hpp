#pragma once

#include <cstddef>
#include <optional>
#include <string>
#include <string_view>

namespace rlcs {

/// Special-token byte sequences of the response template. Fixed, not configurable.
namespace tokens {
inline constexpr std::string_view think_open = "<think>";
inline constexpr std::string_view think_close = "</think>";
inline constexpr std::string_view answer_open = "<answer>";
inline constexpr std::string_view answer_close = "</answer>";
inline constexpr std::string_view box_begin = "<|begin_of_box|>";
inline constexpr std::string_view box_end = "<|end_of_box|>";
}  // namespace tokens

enum class ResponseMode { thinking, non_thinking };

struct StructuredResponse {
    std::string raw_text;
    std::string think_content;
    std::string answer_content;
    std::optional<std::string> boxed_span;
    /// The think section was closed by insertion rather than by the generator.
    bool truncated = false;
    /// Surrogate token count of the whole response.
    std::size_t token_length = 0;
    /// Surrogate token count of the think section. Generators that do not
    /// materialise reasoning text set this directly.
    std::size_t think_tokens = 0;
};

struct StyleThresholds {
    double mixed_script_ratio = 0.3;
    double max_repeat_fraction = 0.3;
    /// Shortest block considered by the repetition detector, in code points.
    std::size_t min_repeat_len = 8;

    bool operator==(const StyleThresholds&) const = default;
};

struct StyleReport {
    double mixed_script_ratio = 0.0;
    double max_repeat_fraction = 0.0;
    bool has_box_markers_in_nonverifiable = false;

    /// True when either fraction exceeds its threshold.
    bool triggered(const StyleThresholds& t) const noexcept {
        return mixed_script_ratio > t.mixed_script_ratio || max_repeat_fraction > t.max_repeat_fraction;
    }
};

/// Split a raw response into think and answer segments.
///
/// Accepted shapes (whitespace allowed between structural tags):
///   thinking:      <think>T</think><answer>A</answer>   or   <think>T</think>A
///   non_thinking:  the same with empty T, or no think tags at all
/// Throws Error with missing_think_close, tag_order_violation, empty_answer or
/// think_in_non_thinking_mode.
StructuredResponse parse_response(std::string_view raw, ResponseMode mode);

/// Inverse of parse_response for well-formed fields.
std::string render_response(std::string_view think, std::string_view answer, bool answer_tags = true);

/// Text strictly between the single begin/end box pair, trimmed; nullopt when
/// no markers are present. Throws multiple_boxes / unbalanced_box_markers.
std::optional<std::string> extract_boxed(std::string_view answer);

bool contains_box_markers(std::string_view s) noexcept;
bool contains_structural_tags(std::string_view s) noexcept;

/// Whitespace-separated words, single CJK ideographs and special tokens each count as one.
std::size_t surrogate_token_count(std::string_view s);

/// Fraction of adjacent CJK/Latin letter pairs that switch script.
double mixed_script_ratio(std::u32string_view s);

/// Longest block of at least `min_len` code points occurring three or more
/// times without overlap; returns its length (0 if none).
std::size_t longest_triple_repeat(std::u32string_view s, std::size_t min_len);

StyleReport style_check(const StructuredResponse& resp, const StyleThresholds& thresholds, bool verifiable = true);

/// False when a non-verifiable answer carries box markers, or when the
/// structural or box tags are malformed.
bool format_gate(const StructuredResponse& resp, bool verifiable);

}  // namespace rlcs
