#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <numeric>
#include <set>

#include "rlcs/curriculum.hpp"
#include "rlcs/error.hpp"

using namespace rlcs;

namespace {

std::vector<TaskSample> pool_with_tiers(const std::vector<int>& tiers) {
    std::vector<TaskSample> out;
    for (std::size_t i = 0; i < tiers.size(); ++i) {
        TaskSample s;
        s.id = "s" + std::to_string(i);
        s.domain = "math";
        s.tier = tiers[i];
        out.push_back(s);
    }
    return out;
}

std::vector<double> weights_for(const std::vector<std::size_t>& pops) {
    return reweight(CurriculumState{}, pops).tier_weights;
}

}  // namespace

TEST_CASE("bucketing and offline grading") {
    const CurriculumState st;
    CHECK(bucket(st, 0.75) == 3);
    CHECK(bucket(st, 0.0) == 0);
    CHECK(bucket(st, 0.1) == 1);
    CHECK(bucket(st, 1.0) == 4);
    const auto tiers = grade_offline(st, {{"a", 0.75}, {"b", 0.0}, {"c", 0.75}}, {{"c", 1}, {"d", 2}});
    CHECK(tiers.at("a") == 3);
    CHECK(tiers.at("b") == 0);
    CHECK(tiers.at("c") == 2);
    CHECK(tiers.at("d") == 2);
    // ties round up: (3 + 0) / 2 = 1.5 -> 2
    CHECK(grade_offline(st, {{"e", 0.8}}, {{"e", 0}}).at("e") == 2);
    CHECK_THROWS_AS(grade_offline(st, {{"a", 0.5}}, {{"a", 5}}), Error);
    CHECK_THROWS_AS(grade_offline(st, {}, {{"z", -1}}), Error);
    CHECK_THROWS_AS(tier_midpoint(st, 5), Error);
    CHECK(tier_midpoint(st, 2) == doctest::Approx(0.5));
}

TEST_CASE("online grading examples") {
    CurriculumState st;
    TaskSample s;
    s.blended_pass_rate = 0.5;
    auto g = grade_online(st, s, 6, 8);
    CHECK(g.blended_pass_rate == doctest::Approx(0.55).epsilon(1e-15));
    CHECK(g.exposures == 1);
    CHECK(g.tier == 2);
    s.blended_pass_rate = 0.0;
    for (double blend : {0.0, 0.3, 0.8, 1.0}) {
        st.blend_factor = blend;
        CHECK(grade_online(st, s, 0, 8).blended_pass_rate == 0.0);
    }
    CHECK_THROWS_AS(grade_online(st, s, 9, 8), Error);
    st.online_signal = OnlineSignal::pass_at_k;
    st.blend_factor = 0.5;
    CHECK(grade_online(st, s, 1, 8).blended_pass_rate == 0.5);
}

TEST_CASE("online grading contracts toward the observation") {
    Rng rng(4);
    for (int i = 0; i < 2000; ++i) {
        CurriculumState st;
        st.blend_factor = uniform01(rng);
        TaskSample s;
        s.blended_pass_rate = uniform01(rng);
        const int g = 2 + static_cast<int>(uniform_index(rng, 15));
        const int c = static_cast<int>(uniform_index(rng, g + 1));
        const double obs = static_cast<double>(c) / g;
        const auto out = grade_online(st, s, c, g);
        CHECK(std::abs(out.blended_pass_rate - obs) <= st.blend_factor * std::abs(s.blended_pass_rate - obs) + 1e-15);
    }
}

TEST_CASE("reweight examples") {
    const auto all = weights_for({10, 10, 10, 10, 10});
    const std::vector<double> tent{0.1, 0.2, 0.4, 0.2, 0.1};
    for (int i = 0; i < 5; ++i) CHECK(all[i] == doctest::Approx(tent[i]).epsilon(1e-15));
    const auto no_hard = weights_for({0, 10, 10, 10, 10});
    const std::vector<double> expect{0.0, 0.2 / 0.9, 0.4 / 0.9, 0.2 / 0.9, 0.1 / 0.9};
    for (int i = 0; i < 5; ++i) CHECK(no_hard[i] == doctest::Approx(expect[i]).epsilon(1e-15));
    CHECK(weights_for({0, 0, 7, 0, 0}) == std::vector<double>{0, 0, 1, 0, 0});
    CHECK_THROWS_AS(weights_for({0, 0, 0, 0, 0}), Error);
    try {
        weights_for({0, 0, 0, 0, 0});
    } catch (const Error& e) {
        CHECK(e.code() == Errc::all_tiers_empty);
    }
}

TEST_CASE("weights stay a distribution on nonempty tiers") {
    Rng rng(8);
    for (int i = 0; i < 2000; ++i) {
        std::vector<std::size_t> pops(5);
        for (auto& p : pops) p = uniform_index(rng, 3) == 0 ? 0 : uniform_index(rng, 50);
        if (std::accumulate(pops.begin(), pops.end(), std::size_t{0}) == 0) continue;
        const auto w = weights_for(pops);
        CHECK(std::accumulate(w.begin(), w.end(), 0.0) == doctest::Approx(1.0).epsilon(1e-12));
        for (int t = 0; t < 5; ++t) {
            CHECK(w[t] >= 0.0);
            if (pops[t] == 0) CHECK(w[t] == 0.0);
        }
    }
}

TEST_CASE("easiest tier share and weight respond monotonically") {
    const CurriculumState st;
    Rng rng(12);
    int compared = 0;
    for (int trial = 0; trial < 500; ++trial) {
        std::vector<double> rates(200);
        for (auto& r : rates) r = uniform01(rng);
        std::vector<double> raised = rates;
        for (auto& r : raised) r = std::min(1.0, r + 0.2 * uniform01(rng));
        std::vector<std::size_t> before(5), after(5);
        for (double r : rates) ++before[bucket(st, r)];
        for (double r : raised) ++after[bucket(st, r)];
        CHECK(after[4] >= before[4]);
        // with the same set of occupied tiers the easy weight can only shrink
        bool same_support = true;
        for (int t = 0; t < 5; ++t) same_support &= (before[t] == 0) == (after[t] == 0);
        if (!same_support || before[4] == 0) continue;
        CHECK(reweight(st, after).tier_weights[4] <= reweight(st, before).tier_weights[4] + 1e-15);
        ++compared;
    }
    CHECK(compared > 100);
    // heavy easy share is damped all the way out
    const auto w = weights_for({1, 1, 1, 1, 996});
    CHECK(w[4] < 0.001);
}

TEST_CASE("draw_batch examples") {
    auto pool = pool_with_tiers({0, 1, 2, 2, 2, 3, 4, 2, 1, 0});
    CurriculumState st;
    st.tier_weights = {0, 0, 1, 0, 0};
    const auto d = draw_batch(st, pool, 3, 99);
    CHECK(d.indices.size() == 3);
    for (auto i : d.indices) CHECK(pool[i].tier == 2);
    CHECK(draw_batch(st, pool, 3, 99).indices == d.indices);

    const CurriculumState def;
    const auto full = draw_batch(def, pool, pool.size(), 5);
    std::vector<std::size_t> sorted = full.indices;
    std::sort(sorted.begin(), sorted.end());
    std::vector<std::size_t> all(pool.size());
    std::iota(all.begin(), all.end(), std::size_t{0});
    CHECK(sorted == all);
    CHECK_FALSE(full.exhausted);

    const auto over = draw_batch(def, pool, 50, 5);
    CHECK(over.exhausted);
    CHECK(over.indices.size() == pool.size());
    CHECK(over.diagnostic.find("PoolExhausted") != std::string::npos);
}

TEST_CASE("empirical tier frequencies follow the weights") {
    std::vector<int> tiers;
    for (int t = 0; t < 5; ++t)
        for (int k = 0; k < 40; ++k) tiers.push_back(t);
    const auto pool = pool_with_tiers(tiers);
    const CurriculumState st;
    Rng rng(2024);
    std::vector<int> counts(5);
    const int draws = 10000;
    for (int i = 0; i < draws; ++i) ++counts[pool[draw_batch(st, pool, 1, rng).indices[0]].tier];
    for (int t = 0; t < 5; ++t)
        CHECK(std::abs(static_cast<double>(counts[t]) / draws - st.tier_weights[t]) <= 0.02);
}

TEST_CASE("uniform draw is a partial permutation") {
    const auto pool = pool_with_tiers(std::vector<int>(30, 1));
    Rng rng(1);
    const auto d = draw_uniform(pool, 12, rng);
    CHECK(std::set<std::size_t>(d.indices.begin(), d.indices.end()).size() == 12);
    CHECK_THROWS_AS(draw_uniform(pool, 0, rng), Error);
}

TEST_CASE("state validation") {
    CurriculumState st;
    CHECK_NOTHROW(st.validate());
    st.tier_edges = {0.3, 0.1, 0.7, 0.9};
    CHECK_THROWS_AS(st.validate(), Error);
    st = {};
    st.tent = {1, 1, 1};
    CHECK_THROWS_AS(st.validate(), Error);
    st = {};
    st.blend_factor = 1.5;
    CHECK_THROWS_AS(st.validate(), Error);
}
