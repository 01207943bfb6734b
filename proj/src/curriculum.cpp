#include "rlcs/curriculum.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "rlcs/error.hpp"

namespace rlcs {

void CurriculumState::validate() const {
    const int t = tier_count();
    if (t < 3) throw Error(Errc::config_invalid, "curriculum needs at least 3 tiers");
    for (std::size_t i = 0; i < tier_edges.size(); ++i) {
        if (!(tier_edges[i] > 0.0 && tier_edges[i] < 1.0))
            throw Error(Errc::config_invalid, "tier edges must lie in (0,1)");
        if (i > 0 && !(tier_edges[i] > tier_edges[i - 1]))
            throw Error(Errc::config_invalid, "tier edges must be strictly ascending");
    }
    if (static_cast<int>(tent.size()) != t || static_cast<int>(tier_weights.size()) != t)
        throw Error(Errc::config_invalid, "tent and tier weights need one entry per tier");
    if (std::any_of(tent.begin(), tent.end(), [](double w) { return !(w >= 0.0) || !std::isfinite(w); }))
        throw Error(Errc::config_invalid, "tent weights must be nonnegative");
    if (!(std::accumulate(tent.begin(), tent.end(), 0.0) > 0.0))
        throw Error(Errc::config_invalid, "tent weights must not all be zero");
    if (!(blend_factor >= 0.0 && blend_factor <= 1.0)) throw Error(Errc::config_invalid, "blend factor outside [0,1]");
    if (!(easy_share_threshold >= 0.0 && easy_share_threshold < 1.0))
        throw Error(Errc::config_invalid, "easy share threshold outside [0,1)");
    if (!(easy_damping >= 0.0 && easy_damping <= 1.0)) throw Error(Errc::config_invalid, "easy damping outside [0,1]");
}

int bucket(const CurriculumState& state, double pass_rate) {
    return static_cast<int>(std::upper_bound(state.tier_edges.begin(), state.tier_edges.end(), pass_rate) -
                            state.tier_edges.begin());
}

double tier_midpoint(const CurriculumState& state, int tier) {
    if (tier < 0 || tier >= state.tier_count())
        throw Error(Errc::tier_out_of_range, "tier " + std::to_string(tier) + " out of range");
    const double lo = tier == 0 ? 0.0 : state.tier_edges[tier - 1];
    const double hi = tier == state.tier_count() - 1 ? 1.0 : state.tier_edges[tier];
    return 0.5 * (lo + hi);
}

std::map<std::string, int> grade_offline(const CurriculumState& state, const std::map<std::string, double>& pass_rates,
                                         const std::map<std::string, int>& human_tiers) {
    const int t = state.tier_count();
    auto check_human = [t](const std::string& id, int h) {
        if (h < 0 || h >= t)
            throw Error(Errc::tier_out_of_range, "human tier " + std::to_string(h) + " for " + id + " out of range");
    };
    std::map<std::string, int> tiers;
    for (const auto& [id, rate] : pass_rates) {
        if (!(rate >= 0.0 && rate <= 1.0))
            throw Error(Errc::invalid_argument, "pass rate for " + id + " outside [0,1]");
        int tier = bucket(state, rate);
        if (auto it = human_tiers.find(id); it != human_tiers.end()) {
            check_human(id, it->second);
            tier = (tier + it->second + 1) / 2;  // mean, rounded half up
        }
        tiers[id] = tier;
    }
    for (const auto& [id, h] : human_tiers) {
        if (tiers.contains(id)) continue;
        check_human(id, h);
        tiers[id] = h;
    }
    return tiers;
}

TaskSample grade_online(const CurriculumState& state, TaskSample sample, int group_correct, int group_size) {
    if (group_size < 1 || group_correct < 0 || group_correct > group_size)
        throw Error(Errc::invalid_argument, "group_correct must lie in [0, group_size]");
    const double observed = state.online_signal == OnlineSignal::fraction
                                ? static_cast<double>(group_correct) / static_cast<double>(group_size)
                                : (group_correct > 0 ? 1.0 : 0.0);
    const double blended = state.blend_factor * sample.blended_pass_rate + (1.0 - state.blend_factor) * observed;
    sample.blended_pass_rate = std::clamp(blended, 0.0, 1.0);
    ++sample.exposures;
    sample.tier = bucket(state, sample.blended_pass_rate);
    return sample;
}

std::vector<std::size_t> tier_populations(const CurriculumState& state, std::span<const TaskSample> samples) {
    std::vector<std::size_t> pops(static_cast<std::size_t>(state.tier_count()), 0);
    for (const auto& s : samples) {
        if (s.tier < 0 || s.tier >= state.tier_count())
            throw Error(Errc::tier_out_of_range, "sample " + s.id + " has tier " + std::to_string(s.tier));
        ++pops[static_cast<std::size_t>(s.tier)];
    }
    return pops;
}

CurriculumState reweight(CurriculumState state, std::span<const std::size_t> populations) {
    const auto t = static_cast<std::size_t>(state.tier_count());
    if (populations.size() != t) throw Error(Errc::invalid_argument, "population vector length must equal tier count");
    const std::size_t total = std::accumulate(populations.begin(), populations.end(), std::size_t{0});
    if (total == 0) throw Error(Errc::all_tiers_empty, "every difficulty tier is empty");

    std::vector<double> w(t, 0.0);
    std::size_t nonempty = 0, easiest = 0;
    for (std::size_t i = 0; i < t; ++i) {
        if (populations[i] == 0) continue;
        w[i] = state.tent[i];
        ++nonempty;
        easiest = i;
    }
    if (nonempty == 1) {
        std::fill(w.begin(), w.end(), 0.0);
        w[easiest] = 1.0;
        state.tier_weights = std::move(w);
        return state;
    }

    const double share = static_cast<double>(populations[easiest]) / static_cast<double>(total);
    if (share > state.easy_share_threshold) {
        const double excess = (share - state.easy_share_threshold) / (1.0 - state.easy_share_threshold);
        w[easiest] *= std::max(0.0, 1.0 - state.easy_damping * excess);
    }

    double sum = std::accumulate(w.begin(), w.end(), 0.0);
    if (!(sum > 0.0)) {
        for (std::size_t i = 0; i < t; ++i) w[i] = populations[i] > 0 ? 1.0 : 0.0;
        sum = static_cast<double>(nonempty);
    }
    for (auto& x : w) x /= sum;
    state.tier_weights = std::move(w);
    return state;
}

DrawResult draw_batch(const CurriculumState& state, std::span<const TaskSample> samples, std::size_t n, Rng& rng) {
    const auto t = static_cast<std::size_t>(state.tier_count());
    if (n == 0) throw Error(Errc::invalid_argument, "draw_batch needs n >= 1");
    if (samples.empty()) throw Error(Errc::invalid_argument, "draw_batch needs a nonempty pool");
    if (state.tier_weights.size() != t) throw Error(Errc::config_invalid, "tier weight vector has wrong length");

    std::vector<std::vector<std::size_t>> buckets(t);
    for (std::size_t i = 0; i < samples.size(); ++i) {
        const int tier = samples[i].tier;
        if (tier < 0 || static_cast<std::size_t>(tier) >= t)
            throw Error(Errc::tier_out_of_range, "sample " + samples[i].id + " has tier " + std::to_string(tier));
        buckets[static_cast<std::size_t>(tier)].push_back(i);
    }

    DrawResult out;
    const std::size_t take = std::min(n, samples.size());
    if (take < n) {
        out.exhausted = true;
        out.diagnostic = "PoolExhausted: requested " + std::to_string(n) + ", pool holds " +
                         std::to_string(samples.size());
    }
    out.indices.reserve(take);
    std::vector<double> eff(t);
    for (std::size_t k = 0; k < take; ++k) {
        double sum = 0.0;
        for (std::size_t i = 0; i < t; ++i) {
            eff[i] = buckets[i].empty() ? 0.0 : state.tier_weights[i];
            sum += eff[i];
        }
        if (!(sum > 0.0)) {
            // weights vanish on every tier that still has samples: uniform over samples
            for (std::size_t i = 0; i < t; ++i) eff[i] = static_cast<double>(buckets[i].size());
            sum = std::accumulate(eff.begin(), eff.end(), 0.0);
        }
        const double u = uniform01(rng) * sum;
        std::size_t tier = t;
        double acc = 0.0;
        for (std::size_t i = 0; i < t; ++i) {
            if (eff[i] <= 0.0) continue;
            acc += eff[i];
            tier = i;
            if (u < acc) break;
        }
        auto& b = buckets[tier];
        const std::size_t j = uniform_index(rng, b.size());
        out.indices.push_back(b[j]);
        b[j] = b.back();
        b.pop_back();
    }
    return out;
}

DrawResult draw_batch(const CurriculumState& state, std::span<const TaskSample> samples, std::size_t n,
                      std::uint64_t seed) {
    Rng rng(seed);
    return draw_batch(state, samples, n, rng);
}

DrawResult draw_uniform(std::span<const TaskSample> samples, std::size_t n, Rng& rng) {
    if (n == 0) throw Error(Errc::invalid_argument, "draw_uniform needs n >= 1");
    if (samples.empty()) throw Error(Errc::invalid_argument, "draw_uniform needs a nonempty pool");
    std::vector<std::size_t> pool(samples.size());
    std::iota(pool.begin(), pool.end(), std::size_t{0});
    DrawResult out;
    const std::size_t take = std::min(n, samples.size());
    if (take < n) {
        out.exhausted = true;
        out.diagnostic = "PoolExhausted: requested " + std::to_string(n) + ", pool holds " +
                         std::to_string(samples.size());
    }
    // partial Fisher-Yates
    for (std::size_t k = 0; k < take; ++k) {
        const std::size_t j = k + uniform_index(rng, pool.size() - k);
        std::swap(pool[k], pool[j]);
    }
    pool.resize(take);
    out.indices = std::move(pool);
    return out;
}

}  // namespace rlcs
