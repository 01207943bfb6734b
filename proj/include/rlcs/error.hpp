#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace rlcs {

enum class Errc {
    // response-parser
    missing_think_close,
    tag_order_violation,
    empty_answer,
    think_in_non_thinking_mode,
    multiple_boxes,
    unbalanced_box_markers,
    // reward-core
    unknown_domain,
    malformed_box,
    // judge-client
    judge_timeout,
    judge_protocol_error,
    judge_unavailable,
    // curriculum
    tier_out_of_range,
    all_tiers_empty,
    // vision-geom
    coord_out_of_range,
    // infra-sched
    item_exceeds_capacity,
    empty_sample,
    // harness
    config_invalid,
    io_error,
    invalid_argument,
};

std::string_view errc_name(Errc code) noexcept;

class Error : public std::runtime_error {
public:
    Error(Errc code, const std::string& what) : std::runtime_error(what), code_(code) {}

    Errc code() const noexcept { return code_; }

private:
    Errc code_;
};

}  // namespace rlcs
