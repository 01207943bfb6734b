#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <utility>
#include <vector>

namespace rlcs {

struct WorkItem {
    std::string id;
    std::int64_t length = 1;  // tokens
    double cost = 1.0;        // compute surrogate
};

enum class CostMode {
    linear,     ///< cost = length
    quadratic,  ///< cost = length^2 (attention-dominated)
};

double item_cost(std::int64_t length, CostMode mode);
std::vector<WorkItem> make_items(std::span<const std::pair<std::string, std::int64_t>> id_lengths, CostMode mode);

struct RankAssignment {
    std::vector<int> rank_of;   // parallel to the input items
    std::vector<double> loads;  // per-rank total cost

    double max_load() const;
};

/// Longest-processing-time greedy: heaviest first onto the least-loaded rank.
RankAssignment balance_ranks(std::span<const WorkItem> items, int ranks);

inline constexpr std::int64_t default_context_length = 32768;

struct MicroStepPlan {
    std::vector<std::vector<std::string>> bins;
    std::vector<std::int64_t> fill;  // tokens used per bin
    std::int64_t capacity = default_context_length;

    /// Fraction of bin slots that are padding.
    double padding_fraction() const;
};

/// First-fit-decreasing by length. Throws item_exceeds_capacity naming the item.
MicroStepPlan pack_microsteps(std::span<const WorkItem> items, std::int64_t capacity = default_context_length);

struct MicroValue {
    double value = 0.0;
    std::int64_t sample_count = 1;
};

/// Sample-count weighted mean of per-micro-step values.
double weighted_gradient(std::span<const MicroValue> micro_values);

enum class LossAggregation { per_sample, per_token };

double aggregate_loss(const std::vector<std::vector<double>>& token_losses, LossAggregation mode);

}  // namespace rlcs
