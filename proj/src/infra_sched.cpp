#include "rlcs/infra_sched.hpp"

#include <algorithm>
#include <numeric>

#include "rlcs/error.hpp"

namespace rlcs {

double item_cost(std::int64_t length, CostMode mode) {
    const auto l = static_cast<double>(length);
    return mode == CostMode::linear ? l : l * l;
}

std::vector<WorkItem> make_items(std::span<const std::pair<std::string, std::int64_t>> id_lengths, CostMode mode) {
    std::vector<WorkItem> items;
    items.reserve(id_lengths.size());
    for (const auto& [id, len] : id_lengths) {
        if (len < 1) throw Error(Errc::invalid_argument, "item " + id + " has nonpositive length");
        items.push_back({id, len, item_cost(len, mode)});
    }
    return items;
}

double RankAssignment::max_load() const {
    return loads.empty() ? 0.0 : *std::max_element(loads.begin(), loads.end());
}

RankAssignment balance_ranks(std::span<const WorkItem> items, int ranks) {
    if (ranks < 1) throw Error(Errc::invalid_argument, "need at least one rank");
    if (items.empty()) throw Error(Errc::invalid_argument, "no items to balance");
    std::vector<std::size_t> order(items.size());
    std::iota(order.begin(), order.end(), std::size_t{0});
    std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
        if (items[a].cost != items[b].cost) return items[a].cost > items[b].cost;
        if (items[a].id != items[b].id) return items[a].id < items[b].id;
        return a < b;
    });
    RankAssignment out;
    out.rank_of.assign(items.size(), 0);
    out.loads.assign(static_cast<std::size_t>(ranks), 0.0);
    for (std::size_t idx : order) {
        // lowest index wins load ties
        const auto least = std::min_element(out.loads.begin(), out.loads.end()) - out.loads.begin();
        out.rank_of[idx] = static_cast<int>(least);
        out.loads[static_cast<std::size_t>(least)] += items[idx].cost;
    }
    return out;
}

double MicroStepPlan::padding_fraction() const {
    if (bins.empty()) return 0.0;
    const double slots = static_cast<double>(capacity) * static_cast<double>(bins.size());
    const double used = static_cast<double>(std::accumulate(fill.begin(), fill.end(), std::int64_t{0}));
    return 1.0 - used / slots;
}

MicroStepPlan pack_microsteps(std::span<const WorkItem> items, std::int64_t capacity) {
    if (capacity < 1) throw Error(Errc::invalid_argument, "capacity must be positive");
    for (const auto& it : items) {
        if (it.length < 1) throw Error(Errc::invalid_argument, "item " + it.id + " has nonpositive length");
        if (it.length > capacity)
            throw Error(Errc::item_exceeds_capacity, "item " + it.id + " (length " + std::to_string(it.length) +
                                                         ") exceeds capacity " + std::to_string(capacity));
    }
    std::vector<std::size_t> order(items.size());
    std::iota(order.begin(), order.end(), std::size_t{0});
    std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
        if (items[a].length != items[b].length) return items[a].length > items[b].length;
        if (items[a].id != items[b].id) return items[a].id < items[b].id;
        return a < b;
    });
    MicroStepPlan plan;
    plan.capacity = capacity;
    for (std::size_t idx : order) {
        const auto& it = items[idx];
        std::size_t b = 0;
        while (b < plan.bins.size() && plan.fill[b] + it.length > capacity) ++b;
        if (b == plan.bins.size()) {
            plan.bins.emplace_back();
            plan.fill.push_back(0);
        }
        plan.bins[b].push_back(it.id);
        plan.fill[b] += it.length;
    }
    return plan;
}

double weighted_gradient(std::span<const MicroValue> micro_values) {
    if (micro_values.empty()) throw Error(Errc::invalid_argument, "no micro-steps to average");
    double num = 0.0;
    std::int64_t den = 0;
    for (const auto& mv : micro_values) {
        if (mv.sample_count < 1) throw Error(Errc::invalid_argument, "micro-step sample count must be >= 1");
        num += mv.value * static_cast<double>(mv.sample_count);
        den += mv.sample_count;
    }
    return num / static_cast<double>(den);
}

double aggregate_loss(const std::vector<std::vector<double>>& token_losses, LossAggregation mode) {
    if (token_losses.empty()) throw Error(Errc::empty_sample, "no samples to aggregate");
    double sample_mean_sum = 0.0, token_sum = 0.0;
    std::size_t tokens = 0;
    for (std::size_t i = 0; i < token_losses.size(); ++i) {
        const auto& s = token_losses[i];
        if (s.empty()) throw Error(Errc::empty_sample, "sample " + std::to_string(i) + " has no tokens");
        const double sum = std::accumulate(s.begin(), s.end(), 0.0);
        sample_mean_sum += sum / static_cast<double>(s.size());
        token_sum += sum;
        tokens += s.size();
    }
    return mode == LossAggregation::per_sample ? sample_mean_sum / static_cast<double>(token_losses.size())
                                               : token_sum / static_cast<double>(tokens);
}

}  // namespace rlcs
