#pragma once

#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "rlcs/judge.hpp"
#include "rlcs/response_parser.hpp"

namespace rlcs {

enum class Domain {
    math,
    physics,
    chemistry,
    long_document,
    chart,
    ocr,
    vqa,
    geoguess,
    grounding,
    spatial,
    gui_agent,
    video,
};

inline constexpr Domain all_domains[] = {Domain::math,  Domain::physics,  Domain::chemistry, Domain::long_document,
                                         Domain::chart, Domain::ocr,      Domain::vqa,       Domain::geoguess,
                                         Domain::grounding, Domain::spatial, Domain::gui_agent, Domain::video};

std::string_view domain_name(Domain d) noexcept;
/// Throws Error(unknown_domain).
Domain parse_domain(std::string_view name);
/// Whether the domain's reward is scored 0/1.
bool domain_is_binary(Domain d) noexcept;

enum class RewardSource { rule, judge, fallback };
std::string_view source_name(RewardSource s) noexcept;

struct RewardRequest {
    Domain domain = Domain::math;
    std::string question;
    std::string reference;
    /// Either an already-extracted answer, or a full templated response.
    std::string candidate;
    bool verifiable = true;
};

struct RewardResult {
    double score = 0.0;
    bool binary = true;
    RewardSource source = RewardSource::rule;
    std::string diagnostic;
};

/// Axis-aligned box in normalized [0,1000] coordinates.
struct Box {
    double x1 = 0, y1 = 0, x2 = 0, y2 = 0;

    bool valid() const noexcept;
    double area() const noexcept { return (x2 - x1) * (y2 - y1); }
    friend bool operator==(const Box&, const Box&) = default;
};

enum class GroundingMatch { greedy, optimal };

struct RewardConfig {
    double rtol_math = 1e-4;   // math, physics, chemistry, vqa, spatial, video
    double rtol_chart = 5e-3;
    double tau = 0.5;
    GroundingMatch grounding_match = GroundingMatch::greedy;
    StyleThresholds style;

    bool operator==(const RewardConfig&) const = default;
};

/// Parse integers, decimals, scientific notation, a/b fractions and a
/// trailing percent sign. Returns nullopt when the text is not such a number.
std::optional<double> parse_number(std::string_view s);

bool numeric_equivalent(std::string_view candidate, std::string_view reference, double rtol);

/// A number immediately followed (optionally after spaces) by a letter run,
/// excluding scientific-notation exponents.
bool has_unit_token(std::string_view s);

/// Edit distance over Unicode scalar values.
std::size_t edit_distance(std::u32string_view a, std::u32string_view b);

RewardResult verify_ocr(std::string_view candidate, std::string_view reference);
RewardResult verify_math(const RewardRequest& req, const JudgeClient& judge, const RewardConfig& cfg = {});
RewardResult verify_chart(const RewardRequest& req, const JudgeClient& judge, const RewardConfig& cfg = {});
RewardResult verify_generic(const RewardRequest& req, const JudgeClient& judge, const RewardConfig& cfg = {});

double iou(const Box& a, const Box& b);

/// Parse "[x1,y1,x2,y2]" or "[[...],[...]]". Throws malformed_box.
std::vector<Box> parse_boxes(std::string_view s);

/// Fraction of ground-truth boxes matched by a prediction with IoU > tau.
RewardResult verify_grounding(std::span<const Box> pred, std::span<const Box> gt, double tau,
                              GroundingMatch mode = GroundingMatch::greedy);

enum class GuiSubtask { action, grounding, qa };

struct ActionRecord {
    std::string action_type;
    std::optional<Box> target;
    std::optional<std::string> text;
};

/// Parse {"action": str, "box": [..] (optional), "text": str (optional)}.
ActionRecord parse_action(std::string_view json_text);

RewardResult verify_gui_agent(const ActionRecord& pred, const ActionRecord& gt, GuiSubtask subtask, double tau,
                              const JudgeClient& judge);

/// Full reward path: format gate and style penalty, answer extraction, then
/// the domain verifier.
RewardResult score(const RewardRequest& req, const JudgeClient& judge, const RewardConfig& cfg = {});

}  // namespace rlcs
