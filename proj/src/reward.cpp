#include "rlcs/reward.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <functional>
#include <tuple>

#include <json.hpp>

#include "rlcs/error.hpp"
#include "rlcs/text.hpp"

namespace rlcs {

using json = nlohmann::json;

namespace {

constexpr std::pair<Domain, std::string_view> domain_names[] = {
    {Domain::math, "math"},
    {Domain::physics, "physics"},
    {Domain::chemistry, "chemistry"},
    {Domain::long_document, "long_document"},
    {Domain::chart, "chart"},
    {Domain::ocr, "ocr"},
    {Domain::vqa, "vqa"},
    {Domain::geoguess, "geoguess"},
    {Domain::grounding, "grounding"},
    {Domain::spatial, "spatial"},
    {Domain::gui_agent, "gui_agent"},
    {Domain::video, "video"},
};

bool is_digit(char c) noexcept { return c >= '0' && c <= '9'; }
bool is_alpha(char c) noexcept { return (c >= 'a' && c <= 'z') || (c >= 'A' && c <= 'Z'); }

std::optional<double> parse_plain_number(std::string_view s) {
    if (s.empty()) return std::nullopt;
    bool negative = false;
    if (s.front() == '+' || s.front() == '-') {
        negative = s.front() == '-';
        s.remove_prefix(1);
    }
    // from_chars would also accept inf/nan; require a digit up front
    if (s.empty() || !(is_digit(s.front()) || (s.front() == '.' && s.size() > 1 && is_digit(s[1]))))
        return std::nullopt;
    double value = 0.0;
    const auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), value, std::chars_format::general);
    if (ec != std::errc() || ptr != s.data() + s.size() || !std::isfinite(value)) return std::nullopt;
    return negative ? -value : value;
}

bool exact_match(std::string_view a, std::string_view b) {
    return text::normalize_for_match(a) == text::normalize_for_match(b);
}

RewardResult binary_result(bool ok, RewardSource source, std::string diagnostic, bool binary = true) {
    return {ok ? 1.0 : 0.0, binary, source, std::move(diagnostic)};
}

/// Identical strings need no judge. Otherwise ask it, and on any judge
/// failure degrade to exact match.
RewardResult judge_or_fallback(const RewardRequest& req, std::string_view candidate, const JudgeClient& judge,
                               std::string_view why) {
    const bool binary = domain_is_binary(req.domain);
    if (exact_match(candidate, req.reference)) return binary_result(true, RewardSource::rule, "exact match", binary);
    try {
        const auto v = judge.judge(req.question, req.reference, candidate, domain_name(req.domain));
        return binary_result(v.equivalent, RewardSource::judge, std::string(why) + "; judge verdict", binary);
    } catch (const Error& e) {
        if (e.code() != Errc::judge_timeout && e.code() != Errc::judge_protocol_error &&
            e.code() != Errc::judge_unavailable)
            throw;
        return binary_result(exact_match(candidate, req.reference), RewardSource::fallback,
                             std::string("judge ") + std::string(errc_name(e.code())) +
                                 ", degraded to exact match: " + e.what(),
                             binary);
    }
}

/// Numeric comparison when both sides parse, else exact match, else judge.
RewardResult numeric_exact_judge(const RewardRequest& req, std::string_view candidate, double rtol,
                                 const JudgeClient& judge) {
    const bool binary = domain_is_binary(req.domain);
    if (parse_number(candidate) && parse_number(req.reference))
        return binary_result(numeric_equivalent(candidate, req.reference, rtol), RewardSource::rule, "numeric",
                             binary);
    if (exact_match(candidate, req.reference)) return binary_result(true, RewardSource::rule, "exact match", binary);
    return judge_or_fallback(req, candidate, judge, "no rule match");
}

bool is_year_literal(std::string_view s, int& year) {
    s = text::trim(s);
    if (s.size() != 4 || !std::all_of(s.begin(), s.end(), is_digit)) return false;
    year = (s[0] - '0') * 1000 + (s[1] - '0') * 100 + (s[2] - '0') * 10 + (s[3] - '0');
    return year >= 1000 && year <= 2100;
}

Box box_from_json(const json& j) {
    if (!j.is_array() || j.size() != 4 || !std::all_of(j.begin(), j.end(), [](const json& v) { return v.is_number(); }))
        throw Error(Errc::malformed_box, "box must be an array of four numbers: " + j.dump());
    Box b{j[0].get<double>(), j[1].get<double>(), j[2].get<double>(), j[3].get<double>()};
    if (!b.valid()) throw Error(Errc::malformed_box, "box violates x1<x2, y1<y2 within [0,1000]: " + j.dump());
    return b;
}

std::tuple<double, double, double, double> box_key(const Box& b) { return {b.x1, b.y1, b.x2, b.y2}; }

void validate_grounding_args(std::span<const Box> pred, std::span<const Box> gt, double tau) {
    if (gt.empty()) throw Error(Errc::invalid_argument, "grounding needs at least one ground-truth box");
    if (!(tau > 0.0 && tau < 1.0)) throw Error(Errc::invalid_argument, "grounding tau must lie in (0,1)");
    for (const auto& b : pred)
        if (!b.valid()) throw Error(Errc::malformed_box, "malformed predicted box");
    for (const auto& b : gt)
        if (!b.valid()) throw Error(Errc::malformed_box, "malformed ground-truth box");
}

std::size_t greedy_matches(std::span<const Box> pred, std::span<const Box> gt, double tau) {
    struct Pair {
        double iou;
        std::size_t g, p;
    };
    std::vector<Pair> pairs;
    pairs.reserve(pred.size() * gt.size());
    for (std::size_t g = 0; g < gt.size(); ++g)
        for (std::size_t p = 0; p < pred.size(); ++p) pairs.push_back({iou(gt[g], pred[p]), g, p});
    // ties resolved on box coordinates so the result does not depend on list order
    std::sort(pairs.begin(), pairs.end(), [&](const Pair& a, const Pair& b) {
        if (a.iou != b.iou) return a.iou > b.iou;
        if (box_key(gt[a.g]) != box_key(gt[b.g])) return box_key(gt[a.g]) < box_key(gt[b.g]);
        return box_key(pred[a.p]) < box_key(pred[b.p]);
    });
    std::vector<bool> gt_used(gt.size()), pred_used(pred.size());
    std::size_t matched = 0;
    for (const auto& pr : pairs) {
        if (pr.iou <= tau) break;
        if (gt_used[pr.g] || pred_used[pr.p]) continue;
        gt_used[pr.g] = pred_used[pr.p] = true;
        ++matched;
    }
    return matched;
}

// maximum-cardinality matching on the IoU > tau graph (Kuhn's augmenting paths)
std::size_t optimal_matches(std::span<const Box> pred, std::span<const Box> gt, double tau) {
    std::vector<std::vector<std::size_t>> adj(gt.size());
    for (std::size_t g = 0; g < gt.size(); ++g)
        for (std::size_t p = 0; p < pred.size(); ++p)
            if (iou(gt[g], pred[p]) > tau) adj[g].push_back(p);
    constexpr std::size_t none = static_cast<std::size_t>(-1);
    std::vector<std::size_t> owner(pred.size(), none);
    std::vector<bool> seen;
    std::function<bool(std::size_t)> augment = [&](std::size_t g) {
        for (std::size_t p : adj[g]) {
            if (seen[p]) continue;
            seen[p] = true;
            if (owner[p] == none || augment(owner[p])) {
                owner[p] = g;
                return true;
            }
        }
        return false;
    };
    std::size_t matched = 0;
    for (std::size_t g = 0; g < gt.size(); ++g) {
        seen.assign(pred.size(), false);
        matched += augment(g) ? 1 : 0;
    }
    return matched;
}

RewardResult clamp_result(RewardResult r) {
    r.score = std::clamp(r.score, 0.0, 1.0);
    return r;
}

}  // namespace

std::string_view domain_name(Domain d) noexcept {
    for (const auto& [dom, name] : domain_names)
        if (dom == d) return name;
    return "unknown";
}

Domain parse_domain(std::string_view name) {
    for (const auto& [dom, n] : domain_names)
        if (n == name) return dom;
    throw Error(Errc::unknown_domain, "unknown domain: " + std::string(name));
}

bool domain_is_binary(Domain d) noexcept {
    switch (d) {
        case Domain::ocr:
        case Domain::geoguess:
        case Domain::grounding:
        case Domain::gui_agent:
            return false;
        default:
            return true;
    }
}

std::string_view source_name(RewardSource s) noexcept {
    switch (s) {
        case RewardSource::rule: return "rule";
        case RewardSource::judge: return "judge";
        case RewardSource::fallback: return "fallback";
    }
    return "rule";
}

bool Box::valid() const noexcept {
    const bool finite = std::isfinite(x1) && std::isfinite(y1) && std::isfinite(x2) && std::isfinite(y2);
    return finite && x1 < x2 && y1 < y2 && x1 >= 0.0 && y1 >= 0.0 && x2 <= 1000.0 && y2 <= 1000.0;
}

std::optional<double> parse_number(std::string_view s) {
    s = text::trim(s);
    double scale = 1.0;
    if (!s.empty() && s.back() == '%') {
        scale = 0.01;
        s = text::trim(s.substr(0, s.size() - 1));
    }
    if (const auto slash = s.find('/'); slash != std::string_view::npos) {
        const auto num = parse_plain_number(text::trim(s.substr(0, slash)));
        const auto den = parse_plain_number(text::trim(s.substr(slash + 1)));
        if (!num || !den || *den == 0.0) return std::nullopt;
        return *num / *den * scale;
    }
    const auto v = parse_plain_number(s);
    if (!v) return std::nullopt;
    return *v * scale;
}

bool numeric_equivalent(std::string_view candidate, std::string_view reference, double rtol) {
    if (!(rtol > 0.0)) throw Error(Errc::invalid_argument, "rtol must be positive");
    const auto a = parse_number(candidate);
    const auto b = parse_number(reference);
    if (!a || !b) return false;
    return std::abs(*a - *b) <= rtol * std::max(std::abs(*b), 1e-12);
}

bool has_unit_token(std::string_view s) {
    const std::size_t n = s.size();
    std::size_t i = 0;
    while (i < n) {
        if (!is_digit(s[i])) {
            ++i;
            continue;
        }
        while (i < n && (is_digit(s[i]) || s[i] == '.')) ++i;
        if (i < n && (s[i] == 'e' || s[i] == 'E')) {
            std::size_t j = i + 1;
            if (j < n && (s[j] == '+' || s[j] == '-')) ++j;
            if (j < n && is_digit(s[j])) {
                i = j;
                while (i < n && is_digit(s[i])) ++i;
            }
        }
        std::size_t j = i;
        while (j < n && s[j] == ' ') ++j;
        // ASCII letters or any non-ASCII lead byte (µ, Ω, °, Å ...)
        if (j < n && (is_alpha(s[j]) || static_cast<unsigned char>(s[j]) >= 0xC0)) return true;
    }
    return false;
}

std::size_t edit_distance(std::u32string_view a, std::u32string_view b) {
    if (a.size() < b.size()) std::swap(a, b);
    std::vector<std::size_t> row(b.size() + 1);
    for (std::size_t j = 0; j <= b.size(); ++j) row[j] = j;
    for (std::size_t i = 1; i <= a.size(); ++i) {
        std::size_t diag = row[0];
        row[0] = i;
        for (std::size_t j = 1; j <= b.size(); ++j) {
            const std::size_t up = row[j];
            row[j] = std::min({row[j] + 1, row[j - 1] + 1, diag + (a[i - 1] == b[j - 1] ? 0 : 1)});
            diag = up;
        }
    }
    return row[b.size()];
}

RewardResult verify_ocr(std::string_view candidate, std::string_view reference) {
    const auto a = text::decode_utf8(candidate);
    const auto b = text::decode_utf8(reference);
    const std::size_t longest = std::max(a.size(), b.size());
    if (longest == 0) return {1.0, false, RewardSource::rule, "both empty"};
    const std::size_t d = edit_distance(a, b);
    return {1.0 - static_cast<double>(d) / static_cast<double>(longest), false, RewardSource::rule,
            "edit distance " + std::to_string(d) + "/" + std::to_string(longest)};
}

RewardResult verify_math(const RewardRequest& req, const JudgeClient& judge, const RewardConfig& cfg) {
    if (req.domain != Domain::math && req.domain != Domain::physics && req.domain != Domain::chemistry)
        throw Error(Errc::invalid_argument, "verify_math called for " + std::string(domain_name(req.domain)));
    const std::string_view cand = text::trim(req.candidate);
    if (req.domain != Domain::math && (has_unit_token(cand) || has_unit_token(req.reference)))
        return judge_or_fallback(req, cand, judge, "unit detected");
    return numeric_exact_judge(req, cand, cfg.rtol_math, judge);
}

RewardResult verify_chart(const RewardRequest& req, const JudgeClient& judge, const RewardConfig& cfg) {
    if (req.domain != Domain::chart) throw Error(Errc::invalid_argument, "verify_chart called for non-chart request");
    const std::string_view cand = text::trim(req.candidate);
    int cand_year = 0, ref_year = 0;
    if (is_year_literal(cand, cand_year) && is_year_literal(req.reference, ref_year))
        return binary_result(cand_year == ref_year, RewardSource::rule, "year rule");
    return numeric_exact_judge(req, cand, cfg.rtol_chart, judge);
}

RewardResult verify_generic(const RewardRequest& req, const JudgeClient& judge, const RewardConfig& cfg) {
    const std::string_view cand = text::trim(req.candidate);
    switch (req.domain) {
        case Domain::vqa:
        case Domain::spatial:
        case Domain::video:
            return numeric_exact_judge(req, cand, cfg.rtol_math, judge);
        case Domain::long_document:
        case Domain::geoguess:
            return judge_or_fallback(req, cand, judge, "semantic match");
        default:
            throw Error(Errc::invalid_argument,
                        "verify_generic called for " + std::string(domain_name(req.domain)));
    }
}

double iou(const Box& a, const Box& b) {
    const double iw = std::min(a.x2, b.x2) - std::max(a.x1, b.x1);
    const double ih = std::min(a.y2, b.y2) - std::max(a.y1, b.y1);
    if (iw <= 0.0 || ih <= 0.0) return 0.0;
    const double inter = iw * ih;
    const double uni = a.area() + b.area() - inter;
    return uni > 0.0 ? inter / uni : 0.0;
}

std::vector<Box> parse_boxes(std::string_view s) {
    json j;
    try {
        j = json::parse(s);
    } catch (const json::parse_error&) {
        throw Error(Errc::malformed_box, "box list is not JSON: " + std::string(s));
    }
    std::vector<Box> boxes;
    if (!j.is_array()) throw Error(Errc::malformed_box, "box list must be an array");
    if (!j.empty() && j[0].is_number()) {
        boxes.push_back(box_from_json(j));
        return boxes;
    }
    for (const auto& item : j) boxes.push_back(box_from_json(item));
    return boxes;
}

RewardResult verify_grounding(std::span<const Box> pred, std::span<const Box> gt, double tau, GroundingMatch mode) {
    validate_grounding_args(pred, gt, tau);
    if (pred.empty()) return {0.0, false, RewardSource::rule, "no predicted boxes"};
    const std::size_t matched = mode == GroundingMatch::greedy ? greedy_matches(pred, gt, tau)
                                                                : optimal_matches(pred, gt, tau);
    return {static_cast<double>(matched) / static_cast<double>(gt.size()), false, RewardSource::rule,
            std::to_string(matched) + "/" + std::to_string(gt.size()) + " boxes above tau"};
}

ActionRecord parse_action(std::string_view json_text) {
    json j;
    try {
        j = json::parse(json_text);
    } catch (const json::parse_error&) {
        throw Error(Errc::invalid_argument, "action record is not JSON");
    }
    if (!j.is_object() || !j.contains("action") || !j["action"].is_string())
        throw Error(Errc::invalid_argument, "action record needs a string \"action\"");
    ActionRecord a;
    a.action_type = j["action"].get<std::string>();
    if (j.contains("box") && !j["box"].is_null()) a.target = box_from_json(j["box"]);
    if (j.contains("text") && !j["text"].is_null()) {
        if (!j["text"].is_string()) throw Error(Errc::invalid_argument, "action \"text\" must be a string");
        a.text = j["text"].get<std::string>();
    }
    return a;
}

RewardResult verify_gui_agent(const ActionRecord& pred, const ActionRecord& gt, GuiSubtask subtask, double tau,
                              const JudgeClient& judge) {
    switch (subtask) {
        case GuiSubtask::action: {
            if (pred.action_type != gt.action_type) return binary_result(false, RewardSource::rule, "action mismatch", false);
            if (pred.target.has_value() != gt.target.has_value())
                return binary_result(false, RewardSource::rule, "target presence mismatch", false);
            if (pred.target && iou(*pred.target, *gt.target) < tau)
                return binary_result(false, RewardSource::rule, "target IoU below tau", false);
            if (pred.text.has_value() != gt.text.has_value() ||
                (pred.text && text::trim(*pred.text) != text::trim(*gt.text)))
                return binary_result(false, RewardSource::rule, "text payload mismatch", false);
            return binary_result(true, RewardSource::rule, "action matched", false);
        }
        case GuiSubtask::grounding: {
            if (!pred.target || !gt.target) return binary_result(false, RewardSource::rule, "missing target box", false);
            return binary_result(iou(*pred.target, *gt.target) >= tau, RewardSource::rule, "target IoU", false);
        }
        case GuiSubtask::qa: {
            const std::string p = pred.text.value_or("");
            const std::string g = gt.text.value_or("");
            if (exact_match(p, g)) return binary_result(true, RewardSource::rule, "exact match", false);
            RewardRequest req{Domain::gui_agent, "", g, p, true};
            return judge_or_fallback(req, p, judge, "no exact match");
        }
    }
    return binary_result(false, RewardSource::rule, "unknown subtask", false);
}

RewardResult score(const RewardRequest& req, const JudgeClient& judge, const RewardConfig& cfg) {
    const bool binary = domain_is_binary(req.domain);
    StructuredResponse resp;
    if (contains_structural_tags(req.candidate)) {
        const auto mode = text::trim(req.candidate).starts_with(tokens::think_open) ? ResponseMode::thinking
                                                                                    : ResponseMode::non_thinking;
        try {
            resp = parse_response(req.candidate, mode);
        } catch (const Error& e) {
            return {0.0, binary, RewardSource::rule, std::string("format: ") + std::string(errc_name(e.code()))};
        }
    } else {
        resp.answer_content = req.candidate;
    }
    if (!format_gate(resp, req.verifiable)) return {0.0, binary, RewardSource::rule, "format gate failed"};
    const auto style = style_check(resp, cfg.style, req.verifiable);
    if (style.triggered(cfg.style)) return {0.0, binary, RewardSource::rule, "style penalty"};

    std::string answer;
    if (auto boxed = req.verifiable ? extract_boxed(resp.answer_content) : std::nullopt)
        answer = std::move(*boxed);
    else
        answer = std::string(text::trim(resp.answer_content));

    RewardRequest inner = req;
    inner.candidate = answer;
    switch (req.domain) {
        case Domain::math:
        case Domain::physics:
        case Domain::chemistry:
            return clamp_result(verify_math(inner, judge, cfg));
        case Domain::chart:
            return clamp_result(verify_chart(inner, judge, cfg));
        case Domain::ocr:
            return clamp_result(verify_ocr(answer, req.reference));
        case Domain::vqa:
        case Domain::spatial:
        case Domain::video:
        case Domain::long_document:
        case Domain::geoguess:
            return clamp_result(verify_generic(inner, judge, cfg));
        case Domain::grounding: {
            const auto gt = parse_boxes(req.reference);
            std::vector<Box> pred;
            try {
                pred = parse_boxes(answer);
            } catch (const Error& e) {
                return {0.0, false, RewardSource::rule, std::string("unparseable prediction: ") + e.what()};
            }
            return clamp_result(verify_grounding(pred, gt, cfg.tau, cfg.grounding_match));
        }
        case Domain::gui_agent: {
            const auto gt = parse_action(req.reference);
            GuiSubtask subtask = GuiSubtask::action;
            const auto ref_json = json::parse(req.reference);
            if (ref_json.contains("subtask")) {
                const auto name = ref_json["subtask"].get<std::string>();
                if (name == "grounding")
                    subtask = GuiSubtask::grounding;
                else if (name == "qa")
                    subtask = GuiSubtask::qa;
                else if (name != "action")
                    throw Error(Errc::invalid_argument, "unknown gui subtask " + name);
            }
            ActionRecord pred;
            try {
                pred = parse_action(answer);
            } catch (const Error& e) {
                return {0.0, false, RewardSource::rule, std::string("unparseable action: ") + e.what()};
            }
            return clamp_result(verify_gui_agent(pred, gt, subtask, cfg.tau, judge));
        }
    }
    throw Error(Errc::unknown_domain, "unhandled domain");
}

}  // namespace rlcs
