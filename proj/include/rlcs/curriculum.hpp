#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "rlcs/random.hpp"

namespace rlcs {

// Tier 0 is the hardest bucket (lowest pass rate); tier T-1 the easiest.

struct TaskSample {
    std::string id;
    std::string domain;
    std::string prompt;
    std::string reference;
    int offline_tier = 0;
    double blended_pass_rate = 0.0;
    std::uint64_t exposures = 0;
    /// Tier of the blended pass rate; maintained by grade_online.
    int tier = 0;
};

enum class OnlineSignal {
    fraction,   ///< within-group correct fraction
    pass_at_k,  ///< 1 if any response in the group is correct
};

struct CurriculumState {
    std::vector<double> tier_edges{0.1, 0.3, 0.7, 0.9};
    std::vector<double> tent{0.1, 0.2, 0.4, 0.2, 0.1};
    std::vector<double> tier_weights{0.1, 0.2, 0.4, 0.2, 0.1};
    double blend_factor = 0.8;
    /// Easiest-tier damping starts once its population share exceeds this.
    double easy_share_threshold = 0.5;
    double easy_damping = 1.0;
    OnlineSignal online_signal = OnlineSignal::fraction;

    bool operator==(const CurriculumState&) const = default;

    int tier_count() const noexcept { return static_cast<int>(tier_edges.size()) + 1; }
    /// Throws config_invalid when the fields are inconsistent.
    void validate() const;
};

/// Number of edges <= rate, i.e. the tier of a pass rate.
int bucket(const CurriculumState& state, double pass_rate);

/// Midpoint of a tier's pass-rate interval; seeds the blended rate from an offline label.
double tier_midpoint(const CurriculumState& state, int tier);

std::map<std::string, int> grade_offline(const CurriculumState& state, const std::map<std::string, double>& pass_rates,
                                         const std::map<std::string, int>& human_tiers);

TaskSample grade_online(const CurriculumState& state, TaskSample sample, int group_correct, int group_size);

std::vector<std::size_t> tier_populations(const CurriculumState& state, std::span<const TaskSample> samples);

/// Tent weights zeroed on empty tiers, easiest nonempty tier damped by its
/// population share, renormalised. Throws all_tiers_empty.
CurriculumState reweight(CurriculumState state, std::span<const std::size_t> populations);

struct DrawResult {
    std::vector<std::size_t> indices;  // into the sample pool
    bool exhausted = false;            // fewer than n samples were available
    std::string diagnostic;
};

/// Pick tiers by tier_weights, then samples uniformly without replacement inside the tier.
DrawResult draw_batch(const CurriculumState& state, std::span<const TaskSample> samples, std::size_t n, Rng& rng);
DrawResult draw_batch(const CurriculumState& state, std::span<const TaskSample> samples, std::size_t n,
                      std::uint64_t seed);

/// Uniform draw without replacement, ignoring tiers.
DrawResult draw_uniform(std::span<const TaskSample> samples, std::size_t n, Rng& rng);

}  // namespace rlcs
