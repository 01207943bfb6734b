#include "rlcs/response_parser.hpp"

#include <algorithm>
#include <array>
#include <numeric>
#include <vector>

#include "rlcs/error.hpp"
#include "rlcs/text.hpp"

namespace rlcs {

namespace {

enum class Tag { think_open, think_close, answer_open, answer_close };

struct TagHit {
    std::size_t pos;
    std::size_t len;
    Tag tag;
};

constexpr std::array<std::pair<std::string_view, Tag>, 4> structural_tags{{
    {tokens::think_open, Tag::think_open},
    {tokens::think_close, Tag::think_close},
    {tokens::answer_open, Tag::answer_open},
    {tokens::answer_close, Tag::answer_close},
}};

std::vector<TagHit> scan_tags(std::string_view s) {
    std::vector<TagHit> hits;
    for (std::size_t i = s.find('<'); i != std::string_view::npos; i = s.find('<', i + 1)) {
        for (const auto& [tok, tag] : structural_tags) {
            if (s.compare(i, tok.size(), tok) == 0) {
                hits.push_back({i, tok.size(), tag});
                break;
            }
        }
    }
    return hits;
}

bool is_blank(std::string_view s) { return text::trim(s).empty(); }

[[noreturn]] void fail(Errc code, const std::string& msg) { throw Error(code, msg); }

}  // namespace

StructuredResponse parse_response(std::string_view raw, ResponseMode mode) {
    const auto hits = scan_tags(raw);
    StructuredResponse out;
    out.raw_text = std::string(raw);

    std::size_t next = 0;  // index into hits
    std::size_t rest_begin = 0;
    const bool has_think = !hits.empty() && hits[0].tag == Tag::think_open;

    if (has_think || mode == ResponseMode::thinking) {
        if (hits.empty()) fail(Errc::missing_think_close, "response has no </think>");
        if (hits[0].tag != Tag::think_open) fail(Errc::tag_order_violation, "response must open with <think>");
        if (!is_blank(raw.substr(0, hits[0].pos))) fail(Errc::tag_order_violation, "text before <think>");
        if (hits.size() < 2 || hits[1].tag != Tag::think_close) {
            const bool close_later = std::any_of(hits.begin() + 1, hits.end(),
                                                 [](const TagHit& h) { return h.tag == Tag::think_close; });
            if (close_later) fail(Errc::tag_order_violation, "tag nested inside <think>");
            fail(Errc::missing_think_close, "response has no </think>");
        }
        const std::size_t think_begin = hits[0].pos + hits[0].len;
        std::string_view think = raw.substr(think_begin, hits[1].pos - think_begin);
        if (mode == ResponseMode::non_thinking) {
            if (!is_blank(think)) fail(Errc::think_in_non_thinking_mode, "non-thinking response carries reasoning");
        } else {
            out.think_content = std::string(think);
        }
        next = 2;
        rest_begin = hits[1].pos + hits[1].len;
    }

    const std::size_t remaining = hits.size() - next;
    if (remaining == 0) {
        out.answer_content = std::string(text::trim(raw.substr(rest_begin)));
    } else if (remaining == 2 && hits[next].tag == Tag::answer_open && hits[next + 1].tag == Tag::answer_close) {
        const auto& open = hits[next];
        const auto& close = hits[next + 1];
        if (!is_blank(raw.substr(rest_begin, open.pos - rest_begin)))
            fail(Errc::tag_order_violation, "text between </think> and <answer>");
        if (!is_blank(raw.substr(close.pos + close.len)))
            fail(Errc::tag_order_violation, "text after </answer>");
        const std::size_t begin = open.pos + open.len;
        out.answer_content = std::string(raw.substr(begin, close.pos - begin));
    } else {
        fail(Errc::tag_order_violation, "unexpected structural tag after the think section");
    }

    if (is_blank(out.answer_content)) fail(Errc::empty_answer, "answer segment is empty");

    out.token_length = surrogate_token_count(raw);
    out.think_tokens = surrogate_token_count(out.think_content);
    return out;
}

std::string render_response(std::string_view think, std::string_view answer, bool answer_tags) {
    std::string out;
    out.reserve(think.size() + answer.size() + 40);
    out += tokens::think_open;
    out += think;
    out += tokens::think_close;
    if (answer_tags) {
        out += tokens::answer_open;
        out += answer;
        out += tokens::answer_close;
    } else {
        out += answer;
    }
    return out;
}

std::optional<std::string> extract_boxed(std::string_view answer) {
    const std::size_t n_begin = text::count_occurrences(answer, tokens::box_begin);
    const std::size_t n_end = text::count_occurrences(answer, tokens::box_end);
    if (n_begin == 0 && n_end == 0) return std::nullopt;
    if (n_begin != n_end) fail(Errc::unbalanced_box_markers, "box markers are unbalanced");
    if (n_begin > 1) fail(Errc::multiple_boxes, "only one boxed span is acceptable");
    const std::size_t b = answer.find(tokens::box_begin);
    const std::size_t e = answer.find(tokens::box_end);
    if (e < b) fail(Errc::unbalanced_box_markers, "end-of-box precedes begin-of-box");
    const std::size_t inner = b + tokens::box_begin.size();
    return std::string(text::trim(answer.substr(inner, e - inner)));
}

bool contains_box_markers(std::string_view s) noexcept {
    return text::contains(s, tokens::box_begin) || text::contains(s, tokens::box_end);
}

bool contains_structural_tags(std::string_view s) noexcept {
    return std::any_of(structural_tags.begin(), structural_tags.end(),
                       [s](const auto& entry) { return text::contains(s, entry.first); });
}

std::size_t surrogate_token_count(std::string_view s) {
    static constexpr std::array<std::string_view, 6> specials{tokens::think_open,   tokens::think_close,
                                                              tokens::answer_open,  tokens::answer_close,
                                                              tokens::box_begin,    tokens::box_end};
    std::size_t count = 0;
    auto count_plain = [&count](std::string_view seg) {
        bool in_word = false;
        for (char32_t c : text::decode_utf8(seg)) {
            const bool space = c == ' ' || c == '\t' || c == '\n' || c == '\r' || c == '\f' || c == '\v';
            if (space) {
                in_word = false;
            } else if (text::is_cjk_ideograph(c)) {
                ++count;
                in_word = false;
            } else if (!in_word) {
                ++count;
                in_word = true;
            }
        }
    };
    std::size_t seg_begin = 0;
    for (std::size_t i = s.find('<'); i != std::string_view::npos; i = s.find('<', i + 1)) {
        for (auto tok : specials) {
            if (s.compare(i, tok.size(), tok) == 0) {
                count_plain(s.substr(seg_begin, i - seg_begin));
                ++count;
                seg_begin = i + tok.size();
                i = seg_begin - 1;
                break;
            }
        }
    }
    count_plain(s.substr(seg_begin));
    return count;
}

double mixed_script_ratio(std::u32string_view s) {
    // 0 = Latin, 1 = CJK; everything else is skipped
    std::vector<unsigned char> scripts;
    scripts.reserve(s.size());
    for (char32_t c : s) {
        if (text::is_latin_letter(c))
            scripts.push_back(0);
        else if (text::is_cjk_ideograph(c))
            scripts.push_back(1);
    }
    if (scripts.size() < 2) return 0.0;
    std::size_t switches = 0;
    for (std::size_t i = 1; i < scripts.size(); ++i) switches += scripts[i] != scripts[i - 1];
    return static_cast<double>(switches) / static_cast<double>(scripts.size() - 1);
}

namespace {

std::vector<std::size_t> suffix_array(std::u32string_view s) {
    const std::size_t n = s.size();
    std::vector<std::size_t> sa(n);
    std::vector<std::size_t> rank(n), tmp(n);
    std::iota(sa.begin(), sa.end(), std::size_t{0});
    for (std::size_t i = 0; i < n; ++i) rank[i] = s[i];
    for (std::size_t k = 1;; k <<= 1) {
        auto key = [&](std::size_t i) {
            return std::pair<std::size_t, std::size_t>(rank[i], i + k < n ? rank[i + k] + 1 : 0);
        };
        std::sort(sa.begin(), sa.end(), [&](std::size_t a, std::size_t b) { return key(a) < key(b); });
        tmp[sa[0]] = 0;
        for (std::size_t i = 1; i < n; ++i) tmp[sa[i]] = tmp[sa[i - 1]] + (key(sa[i - 1]) < key(sa[i]) ? 1 : 0);
        rank.swap(tmp);
        if (rank[sa[n - 1]] == n - 1 || k >= n) break;
    }
    return sa;
}

// lcp[i] = common prefix length of suffixes sa[i-1] and sa[i]; lcp[0] = 0
std::vector<std::size_t> lcp_array(std::u32string_view s, const std::vector<std::size_t>& sa) {
    const std::size_t n = s.size();
    std::vector<std::size_t> rank(n), lcp(n, 0);
    for (std::size_t i = 0; i < n; ++i) rank[sa[i]] = i;
    std::size_t h = 0;
    for (std::size_t i = 0; i < n; ++i) {
        if (rank[i] > 0) {
            const std::size_t j = sa[rank[i] - 1];
            while (i + h < n && j + h < n && s[i + h] == s[j + h]) ++h;
            lcp[rank[i]] = h;
            if (h > 0) --h;
        } else {
            h = 0;
        }
    }
    return lcp;
}

bool has_triple_repeat(const std::vector<std::size_t>& sa, const std::vector<std::size_t>& lcp, std::size_t len) {
    std::vector<std::size_t> group;
    auto group_ok = [&] {
        if (group.size() < 3) return false;
        std::sort(group.begin(), group.end());
        std::size_t count = 1;
        std::size_t last = group[0];
        for (std::size_t k = 1; k < group.size(); ++k) {
            if (group[k] >= last + len) {
                last = group[k];
                if (++count >= 3) return true;
            }
        }
        return false;
    };
    for (std::size_t i = 0; i < sa.size(); ++i) {
        if (i > 0 && lcp[i] >= len) {
            group.push_back(sa[i]);
        } else {
            if (group_ok()) return true;
            group.assign(1, sa[i]);
        }
    }
    return group_ok();
}

}  // namespace

std::size_t longest_triple_repeat(std::u32string_view s, std::size_t min_len) {
    const std::size_t lo_bound = std::max<std::size_t>(min_len, 1);
    const std::size_t n = s.size();
    if (n < 3 * lo_bound) return 0;
    const auto sa = suffix_array(s);
    const auto lcp = lcp_array(s, sa);
    if (!has_triple_repeat(sa, lcp, lo_bound)) return 0;
    // monotone: a block repeated without overlap implies its prefixes are too
    std::size_t lo = lo_bound, hi = n / 3;
    while (lo < hi) {
        const std::size_t mid = lo + (hi - lo + 1) / 2;
        if (has_triple_repeat(sa, lcp, mid))
            lo = mid;
        else
            hi = mid - 1;
    }
    return lo;
}

StyleReport style_check(const StructuredResponse& resp, const StyleThresholds& thresholds, bool verifiable) {
    StyleReport report;
    for (const std::string* segment : {&resp.think_content, &resp.answer_content}) {
        const auto cps = text::decode_utf8(*segment);
        report.mixed_script_ratio = std::max(report.mixed_script_ratio, mixed_script_ratio(cps));
        if (!cps.empty()) {
            const auto block = longest_triple_repeat(cps, thresholds.min_repeat_len);
            report.max_repeat_fraction =
                std::max(report.max_repeat_fraction, static_cast<double>(block) / static_cast<double>(cps.size()));
        }
    }
    report.has_box_markers_in_nonverifiable = !verifiable && contains_box_markers(resp.answer_content);
    return report;
}

bool format_gate(const StructuredResponse& resp, bool verifiable) {
    if (contains_structural_tags(resp.think_content) || contains_structural_tags(resp.answer_content)) return false;
    if (!verifiable) return !contains_box_markers(resp.answer_content);
    try {
        extract_boxed(resp.answer_content);
    } catch (const Error&) {
        return false;
    }
    return true;
}

}  // namespace rlcs
