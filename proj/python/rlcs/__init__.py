from ._rlcs import (
    RlcsError,
    adapt_table,
    balance_ranks,
    compute_ratio,
    edit_distance,
    extract_boxed,
    group_advantages,
    iou,
    pack_microsteps,
    parse_response,
    render_response,
    reweight,
    score,
    simulate,
    update_ema,
    verify_grounding,
    verify_ocr,
    weighted_gradient,
)

__all__ = [
    "RlcsError",
    "adapt_table",
    "balance_ranks",
    "compute_ratio",
    "edit_distance",
    "extract_boxed",
    "group_advantages",
    "iou",
    "pack_microsteps",
    "parse_response",
    "render_response",
    "reweight",
    "score",
    "simulate",
    "update_ema",
    "verify_grounding",
    "verify_ocr",
    "weighted_gradient",
]
