#include "rlcs/expansion.hpp"

#include <algorithm>
#include <cmath>
#include <cstdlib>

#include "rlcs/error.hpp"

namespace rlcs {

void ExpansionState::validate() const {
    if (!(cap >= 1.0) || !std::isfinite(cap)) throw Error(Errc::config_invalid, "expansion cap must be >= 1");
    if (!(beta >= 0.0 && beta < 1.0)) throw Error(Errc::config_invalid, "expansion beta must lie in [0,1)");
    if (!(ema >= 1.0 && ema <= cap)) throw Error(Errc::config_invalid, "expansion ema must lie in [1,cap]");
}

double compute_ratio(double not_valid_rate, double cap) {
    if (!(not_valid_rate >= 0.0)) throw Error(Errc::invalid_argument, "not-valid rate must be nonnegative");
    if (not_valid_rate >= 1.0) return cap;
    return std::clamp(1.0 / (1.0 - not_valid_rate), 1.0, cap);
}

ExpansionState update_ema(ExpansionState state, double observed_ratio) {
    if (!(observed_ratio >= 1.0)) throw Error(Errc::invalid_argument, "observed ratio must be >= 1");
    state.ema = std::clamp(state.beta * state.ema + (1.0 - state.beta) * observed_ratio, 1.0, state.cap);
    return state;
}

std::size_t plan_rollout_count(std::size_t batch, const ExpansionState& state) {
    if (batch == 0) throw Error(Errc::invalid_argument, "batch must be >= 1");
    // the small slack keeps an ema that drifted to 2.0000000000004 from costing an extra prompt
    const double want = static_cast<double>(batch) * state.ema;
    return static_cast<std::size_t>(std::ceil(want - 1e-9 * want));
}

Selection select_informative(std::span<const GroupSummary> groups, std::size_t batch, int group_size) {
    if (group_size < 1) throw Error(Errc::invalid_argument, "group size must be >= 1");
    Selection out;
    std::vector<std::size_t> valid;
    for (std::size_t i = 0; i < groups.size(); ++i) {
        const int c = groups[i].correct;
        if (c < 0 || c > group_size) throw Error(Errc::invalid_argument, "correct count outside [0, G]");
        if (c > 0 && c < group_size) valid.push_back(i);
    }
    out.valid_count = valid.size();
    out.not_valid_rate =
        groups.empty() ? 0.0 : 1.0 - static_cast<double>(valid.size()) / static_cast<double>(groups.size());
    // |2c - G| orders identically to |c - G/2| without fractions
    std::sort(valid.begin(), valid.end(), [&](std::size_t a, std::size_t b) {
        const int da = std::abs(2 * groups[a].correct - group_size);
        const int db = std::abs(2 * groups[b].correct - group_size);
        if (da != db) return da < db;
        if (groups[a].sample_id != groups[b].sample_id) return groups[a].sample_id < groups[b].sample_id;
        return a < b;
    });
    if (valid.size() > batch) valid.resize(batch);
    out.selected = std::move(valid);
    out.shortfall = batch - out.selected.size();
    return out;
}

}  // namespace rlcs
