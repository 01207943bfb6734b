#pragma once

#include <cstddef>
#include <span>
#include <string>
#include <vector>

namespace rlcs {

/// Ratio-EMA controller for rollout oversampling. Invariant: 1 <= ema <= cap.
struct ExpansionState {
    double ema = 1.0;
    double beta = 0.9;
    double cap = 4.0;
    double last_not_valid_rate = 0.0;

    bool operator==(const ExpansionState&) const = default;

    void validate() const;
};

/// 1 / (1 - not_valid_rate), clamped to [1, cap]. Rates at or above 1 map to cap.
double compute_ratio(double not_valid_rate, double cap);

ExpansionState update_ema(ExpansionState state, double observed_ratio);

/// Number of prompts to roll out: ceil(batch * ema).
std::size_t plan_rollout_count(std::size_t batch, const ExpansionState& state);

/// What selection needs to know about one rollout group.
struct GroupSummary {
    std::string sample_id;
    int correct = 0;
};

struct Selection {
    std::vector<std::size_t> selected;  // indices into the input, most balanced first
    double not_valid_rate = 0.0;
    std::size_t valid_count = 0;
    std::size_t shortfall = 0;  // batch - selected.size()
};

/// Keep up to `batch` mixed-correctness groups, ordered by |correct - G/2| then id.
Selection select_informative(std::span<const GroupSummary> groups, std::size_t batch, int group_size);

}  // namespace rlcs
