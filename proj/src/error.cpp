#include "rlcs/error.hpp"

namespace rlcs {

std::string_view errc_name(Errc code) noexcept {
    switch (code) {
        case Errc::missing_think_close: return "MissingThinkClose";
        case Errc::tag_order_violation: return "TagOrderViolation";
        case Errc::empty_answer: return "EmptyAnswer";
        case Errc::think_in_non_thinking_mode: return "ThinkInNonThinkingMode";
        case Errc::multiple_boxes: return "MultipleBoxes";
        case Errc::unbalanced_box_markers: return "UnbalancedBoxMarkers";
        case Errc::unknown_domain: return "UnknownDomain";
        case Errc::malformed_box: return "MalformedBox";
        case Errc::judge_timeout: return "Timeout";
        case Errc::judge_protocol_error: return "ProtocolError";
        case Errc::judge_unavailable: return "Unavailable";
        case Errc::tier_out_of_range: return "TierOutOfRange";
        case Errc::all_tiers_empty: return "AllTiersEmpty";
        case Errc::coord_out_of_range: return "CoordOutOfRange";
        case Errc::item_exceeds_capacity: return "ItemExceedsCapacity";
        case Errc::empty_sample: return "EmptySample";
        case Errc::config_invalid: return "ConfigInvalid";
        case Errc::io_error: return "IOError";
        case Errc::invalid_argument: return "InvalidArgument";
    }
    return "Unknown";
}

}  // namespace rlcs
