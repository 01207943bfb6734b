// Acceptance checks AC1..AC10. Prints one PASS/FAIL line per criterion, exits nonzero on any failure.
#include <algorithm>
#include <array>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iostream>
#include <numeric>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include <unistd.h>

#include <json.hpp>

#include "geom_oracle.hpp"
#include "rlcs/config.hpp"
#include "rlcs/expansion.hpp"
#include "rlcs/infra_sched.hpp"
#include "rlcs/reward.hpp"
#include "rlcs/rollout_sim.hpp"
#include "rlcs/vision_geom.hpp"
#include "sched_oracle.hpp"

using namespace rlcs;
using Clock = std::chrono::steady_clock;

namespace {

struct Outcome {
    bool pass = false;
    std::string detail;
};

double seconds_since(Clock::time_point t0) { return std::chrono::duration<double>(Clock::now() - t0).count(); }

std::string fmt(const char* f, auto... args) {
    char buf[512];
    std::snprintf(buf, sizeof buf, f, args...);
    return buf;
}

std::string source_path(const std::string& rel) { return std::string(RLCS_SOURCE_DIR) + "/" + rel; }

// ---- AC1 ----------------------------------------------------------------

Outcome ac1() {
    const auto report_path = std::filesystem::temp_directory_path() / ("rlcs_ac1_" + std::to_string(::getpid()) + ".json");
    const std::string cmd = std::string("\"") + RLCS_CLI_PATH + "\" verify \"" +
                            source_path("fixtures/reward_cases.jsonl") + "\" --config \"" +
                            source_path("fixtures/verify_config.json") + "\" --out \"" + report_path.string() +
                            "\" > /dev/null 2>&1";
    const auto t0 = Clock::now();
    const int rc = std::system(cmd.c_str());
    const double secs = seconds_since(t0);
    std::ifstream in(report_path);
    if (!in) return {false, fmt("cli exited %d without a report", rc)};
    const auto report = nlohmann::json::parse(in);
    std::filesystem::remove(report_path);
    const std::size_t cases = report.at("cases").get<std::size_t>();
    const std::size_t failures = report.at("failures").get<std::size_t>();
    const std::size_t domains = report.at("domains").size();
    const bool ok = rc == 0 && cases >= 200 && domains == 12 && failures == 0 && secs < 5.0;
    return {ok, fmt("%zu cases, %zu domains, %zu failures, %.3f s", cases, domains, failures, secs)};
}

// ---- AC2 ----------------------------------------------------------------

// plain UTF-8 encoder for the oracle side
std::string utf8(const std::u32string& s) {
    std::string out;
    for (char32_t c : s) {
        if (c < 0x80) {
            out += static_cast<char>(c);
        } else if (c < 0x800) {
            out += static_cast<char>(0xC0 | (c >> 6));
            out += static_cast<char>(0x80 | (c & 0x3F));
        } else if (c < 0x10000) {
            out += static_cast<char>(0xE0 | (c >> 12));
            out += static_cast<char>(0x80 | ((c >> 6) & 0x3F));
            out += static_cast<char>(0x80 | (c & 0x3F));
        } else {
            out += static_cast<char>(0xF0 | (c >> 18));
            out += static_cast<char>(0x80 | ((c >> 12) & 0x3F));
            out += static_cast<char>(0x80 | ((c >> 6) & 0x3F));
            out += static_cast<char>(0x80 | (c & 0x3F));
        }
    }
    return out;
}

std::size_t dp_edit_distance(const std::u32string& a, const std::u32string& b) {
    std::vector<std::vector<std::size_t>> d(a.size() + 1, std::vector<std::size_t>(b.size() + 1));
    for (std::size_t i = 0; i <= a.size(); ++i) d[i][0] = i;
    for (std::size_t j = 0; j <= b.size(); ++j) d[0][j] = j;
    for (std::size_t i = 1; i <= a.size(); ++i)
        for (std::size_t j = 1; j <= b.size(); ++j)
            d[i][j] = std::min({d[i - 1][j] + 1, d[i][j - 1] + 1, d[i - 1][j - 1] + (a[i - 1] == b[j - 1] ? 0 : 1)});
    return d[a.size()][b.size()];
}

char32_t random_scalar(Rng& rng) {
    static const std::array<std::pair<char32_t, char32_t>, 6> ranges{{{0x61, 0x66},
                                                                      {0x20, 0x7E},
                                                                      {0xC0, 0x24F},
                                                                      {0x4E00, 0x4E0F},
                                                                      {0x3040, 0x3050},
                                                                      {0x1F600, 0x1F606}}};
    const auto& [lo, hi] = ranges[uniform_index(rng, ranges.size())];
    return lo + static_cast<char32_t>(uniform_index(rng, hi - lo + 1));
}

std::u32string random_text(Rng& rng) {
    std::u32string s;
    const auto n = uniform_index(rng, 25);
    for (std::uint64_t i = 0; i < n; ++i) s += random_scalar(rng);
    return s;
}

Outcome ac2() {
    Rng rng(derive_seed(20240611, 2));
    double worst = 0.0;
    for (int i = 0; i < 1000; ++i) {
        const auto ref = random_text(rng);
        std::u32string cand = ref;
        // half the pairs are mutations of the reference so distances spread out
        if (uniform_index(rng, 2)) {
            cand = random_text(rng);
        } else {
            for (int e = 0, edits = static_cast<int>(uniform_index(rng, 6)); e < edits; ++e) {
                const auto op = uniform_index(rng, 3);
                const auto pos = cand.empty() ? 0 : uniform_index(rng, cand.size() + (op == 0 ? 1 : 0));
                if (op == 0) {
                    cand.insert(cand.begin() + static_cast<std::ptrdiff_t>(pos), random_scalar(rng));
                } else if (!cand.empty() && pos < cand.size()) {
                    if (op == 1)
                        cand.erase(pos, 1);
                    else
                        cand[pos] = random_scalar(rng);
                }
            }
        }
        const std::size_t longest = std::max(ref.size(), cand.size());
        const double expected =
            longest == 0 ? 1.0 : 1.0 - static_cast<double>(dp_edit_distance(cand, ref)) / static_cast<double>(longest);
        const double got = verify_ocr(utf8(cand), utf8(ref)).score;
        worst = std::max(worst, std::abs(got - expected));
    }
    return {worst <= 1e-12, fmt("1000 pairs, max |diff| = %.3g", worst)};
}

// ---- AC3 ----------------------------------------------------------------

Outcome ac3() {
    const FallbackJudge judge;
    const RewardRequest req{Domain::math, "", "43", "43.0", true};
    const double math = verify_math(req, judge).score;
    const double ocr = verify_ocr("43.0", "43").score;
    return {math == 1.0 && ocr < 1.0, fmt("math %.4g, ocr %.4g", math, ocr)};
}

// ---- AC4 ----------------------------------------------------------------

// boxes on a quarter-unit lattice so every area is an exact integer count of 1/16 cells
Box lattice_box(Rng& rng) {
    auto coord = [&] { return static_cast<double>(uniform_index(rng, 4001)) / 4.0; };
    double x1 = coord(), x2 = coord(), y1 = coord(), y2 = coord();
    if (x1 > x2) std::swap(x1, x2);
    if (y1 > y2) std::swap(y1, y2);
    if (x1 == x2) x2 = std::min(1000.0, x1 + 0.25), x1 = x2 - 0.25;
    if (y1 == y2) y2 = std::min(1000.0, y1 + 0.25), y1 = y2 - 0.25;
    return {x1, y1, x2, y2};
}

double rational_iou(const Box& a, const Box& b) {
    auto q = [](double v) { return static_cast<long long>(std::llround(v * 4.0)); };
    const long long ax1 = q(a.x1), ay1 = q(a.y1), ax2 = q(a.x2), ay2 = q(a.y2);
    const long long bx1 = q(b.x1), by1 = q(b.y1), bx2 = q(b.x2), by2 = q(b.y2);
    const long long iw = std::max(0LL, std::min(ax2, bx2) - std::max(ax1, bx1));
    const long long ih = std::max(0LL, std::min(ay2, by2) - std::max(ay1, by1));
    const long long inter = iw * ih;
    const long long uni = (ax2 - ax1) * (ay2 - ay1) + (bx2 - bx1) * (by2 - by1) - inter;
    const long long g = std::gcd(inter, uni);
    // both terms are below 2^53, so one division gives the correctly rounded quotient
    return static_cast<double>(inter / g) / static_cast<double>(uni / g);
}

Outcome ac4() {
    Rng rng(derive_seed(20240611, 4));
    int exact = 0;
    for (int i = 0; i < 500; ++i) {
        const Box a = lattice_box(rng);
        // a third of the pairs overlap by construction
        Box b = lattice_box(rng);
        if (i % 3 == 0) {
            b = a;
            b.x2 = std::min(1000.0, b.x2 + static_cast<double>(uniform_index(rng, 200)) / 4.0);
            b.y1 = std::max(0.0, b.y1 - static_cast<double>(uniform_index(rng, 200)) / 4.0);
        }
        if (iou(a, b) == rational_iou(a, b) && iou(b, a) == rational_iou(a, b)) ++exact;
    }
    int invariant = 0;
    for (int trial = 0; trial < 100; ++trial) {
        std::vector<Box> gt, pred;
        for (auto k = uniform_index(rng, 6) + 1; k > 0; --k) {
            gt.push_back(lattice_box(rng));
            Box p = gt.back();
            p.x1 = std::max(0.0, p.x1 - static_cast<double>(uniform_index(rng, 40)));
            pred.push_back(uniform_index(rng, 4) ? p : lattice_box(rng));
        }
        for (auto k = uniform_index(rng, 3); k > 0; --k) pred.push_back(lattice_box(rng));
        const double base = verify_grounding(pred, gt, 0.5).score;
        auto sp = pred;
        auto sg = gt;
        std::shuffle(sp.begin(), sp.end(), rng);
        std::shuffle(sg.begin(), sg.end(), rng);
        if (verify_grounding(sp, sg, 0.5).score == base) ++invariant;
    }
    return {exact == 500 && invariant == 100,
            fmt("iou exact on %d/500 pairs, grounding invariant on %d/100 shuffles", exact, invariant)};
}

// ---- AC5 ----------------------------------------------------------------

Outcome ac5() {
    ExpansionState st;
    int reached = -1;
    for (int i = 1; i <= 100; ++i) {
        st = update_ema(st, compute_ratio(0.5, st.cap));
        if (reached < 0 && std::abs(st.ema - 2.0) <= 1e-4) reached = i;
    }
    const bool converged = reached > 0 && std::abs(st.ema - 2.0) <= 1e-4;

    ExperimentConfig cfg;
    cfg.seed = 5;
    cfg.batch = 32;
    cfg.curriculum_enabled = false;
    cfg.learner.eta = 0.0;
    cfg.dataset.size = 2048;
    const int iterations = 200, warmup = 50;
    const FallbackJudge judge;
    auto in_band_fraction = [&](bool expansion) {
        ExperimentConfig c = cfg;
        c.expansion_enabled = expansion;
        const auto res = run_experiment(c, synthesize_dataset(c), iterations, judge);
        int in_band = 0;
        for (int it = warmup; it < iterations; ++it)
            if (std::abs(res.log.records[it].valid_fill - 1.0) <= 0.1) ++in_band;
        return static_cast<double>(in_band) / (iterations - warmup);
    };
    const double on = in_band_fraction(true);
    const double off = in_band_fraction(false);
    const bool ok = converged && on >= 0.8 && off < on;
    return {ok, fmt("ema within 1e-4 of 2 after %d updates; fill within 10%% of B in %.0f%% of iterations "
                    "(disabled: %.0f%%)",
                    reached, 100 * on, 100 * off)};
}

// ---- AC6 ----------------------------------------------------------------

Outcome ac6() {
    const auto t0 = Clock::now();
    Rng rng(derive_seed(20240611, 6));
    std::size_t lpt_instances = 0, ffd_instances = 0, lpt_bad = 0, ffd_bad = 0;
    double worst_lpt = 0.0;
    auto check_lpt = [&](const std::vector<double>& costs, int m) {
        std::vector<WorkItem> items;
        for (std::size_t i = 0; i < costs.size(); ++i) items.push_back({"j" + std::to_string(i), 1, costs[i]});
        const double got = balance_ranks(items, m).max_load();
        const double opt = oracle::optimal_makespan(costs, m);
        worst_lpt = std::max(worst_lpt, got / opt / (4.0 / 3.0 - 1.0 / (3.0 * m)));
        if (got > (4.0 / 3.0 - 1.0 / (3.0 * m)) * opt + 1e-9) ++lpt_bad;
        ++lpt_instances;
    };
    for (int m = 1; m <= 4; ++m) {
        // the classic instance where the bound is attained
        std::vector<double> tight;
        for (int k = 2 * m - 1; k >= m + 1; --k) tight.insert(tight.end(), {double(k), double(k)});
        tight.insert(tight.end(), {double(m), double(m), double(m)});
        if (tight.size() <= 10) check_lpt(tight, m);
        for (int n = 1; n <= 10; ++n)
            for (int rep = 0; rep < 60; ++rep) {
                std::vector<double> costs(static_cast<std::size_t>(n));
                const auto hi = rep % 2 ? 10 : 1000;
                for (auto& c : costs) c = static_cast<double>(1 + uniform_index(rng, hi));
                check_lpt(costs, m);
            }
    }
    // every nonincreasing cost sequence of up to 7 jobs drawn from 1..5, on 2..4 ranks
    std::function<void(std::vector<double>&, int)> all_lpt = [&](std::vector<double>& seq, int top) {
        if (!seq.empty())
            for (int m = 2; m <= 4; ++m) check_lpt(seq, m);
        if (seq.size() == 7) return;
        for (int v = top; v >= 1; --v) {
            seq.push_back(v);
            all_lpt(seq, v);
            seq.pop_back();
        }
    };
    std::vector<double> seq;
    all_lpt(seq, 5);
    auto check_ffd = [&](const std::vector<std::int64_t>& lengths, std::int64_t cap) {
        std::vector<WorkItem> items;
        for (std::size_t i = 0; i < lengths.size(); ++i)
            items.push_back({"i" + std::to_string(i), lengths[i], static_cast<double>(lengths[i])});
        const auto bins = pack_microsteps(items, cap).bins.size();
        if (9 * bins > 11 * oracle::optimal_bins(lengths, cap) + 6) ++ffd_bad;
        ++ffd_instances;
    };
    // every multiset of up to 6 lengths from 1..12 at capacity 12
    std::function<void(std::vector<std::int64_t>&, std::int64_t)> all_ffd = [&](std::vector<std::int64_t>& ls,
                                                                                 std::int64_t top) {
        if (!ls.empty()) check_ffd(ls, 12);
        if (ls.size() == 6) return;
        for (std::int64_t v = top; v >= 1; --v) {
            ls.push_back(v);
            all_ffd(ls, v);
            ls.pop_back();
        }
    };
    std::vector<std::int64_t> ls;
    all_ffd(ls, 12);
    for (int n = 1; n <= 8; ++n)
        for (int rep = 0; rep < 300; ++rep) {
            const std::int64_t cap = 10 + static_cast<std::int64_t>(uniform_index(rng, 200));
            std::vector<std::int64_t> lengths(static_cast<std::size_t>(n));
            for (std::size_t i = 0; i < lengths.size(); ++i) {
                // bias toward items just over a third or half of capacity, where FFD is weakest
                const auto frac = uniform_index(rng, 3);
                lengths[i] = frac == 0 ? cap / 2 + 1 + static_cast<std::int64_t>(uniform_index(rng, cap / 4 + 1))
                             : frac == 1 ? cap / 4 + 1 + static_cast<std::int64_t>(uniform_index(rng, cap / 8 + 1))
                                         : 1 + static_cast<std::int64_t>(uniform_index(rng, cap));
                lengths[i] = std::min(lengths[i], cap);
            }
            check_ffd(lengths, cap);
        }
    const double secs = seconds_since(t0);
    const bool ok = lpt_bad == 0 && ffd_bad == 0 && secs < 60.0;
    return {ok, fmt("LPT %zu instances (%zu over bound, worst %.3f of bound), FFD %zu instances (%zu over bound), "
                    "%.2f s",
                    lpt_instances, lpt_bad, worst_lpt, ffd_instances, ffd_bad, secs)};
}

// ---- AC7 ----------------------------------------------------------------

Outcome ac7() {
    Rng rng(derive_seed(20240611, 7));
    double worst = 0.0;
    for (int t = 0; t < 10000; ++t) {
        std::vector<double> per_sample(1 + uniform_index(rng, 128));
        for (auto& v : per_sample) v = (uniform01(rng) * 2.0 - 1.0) * std::pow(10.0, uniform01(rng) * 2.0 - 1.0);
        std::vector<MicroValue> micro;
        for (std::size_t i = 0; i < per_sample.size();) {
            const std::size_t n = std::min<std::size_t>(1 + uniform_index(rng, 16), per_sample.size() - i);
            double s = 0.0;
            for (std::size_t k = 0; k < n; ++k) s += per_sample[i + k];
            micro.push_back({s / static_cast<double>(n), static_cast<std::int64_t>(n)});
            i += n;
        }
        const double flat =
            std::accumulate(per_sample.begin(), per_sample.end(), 0.0) / static_cast<double>(per_sample.size());
        worst = std::max(worst, std::abs(weighted_gradient(micro) - flat));
    }
    return {worst <= 1e-12, fmt("10000 partitions, max |diff| = %.3g", worst)};
}

// ---- AC8 ----------------------------------------------------------------

Outcome ac8() {
    Rng rng(derive_seed(20240611, 8));
    double worst_identity = 0.0;
    for (std::size_t h = 1; h <= 16; ++h)
        for (std::size_t w = 1; w <= 16; ++w) {
            std::vector<double> v(h * w * 2);
            for (auto& x : v) x = uniform01(rng) * 10.0 - 5.0;
            const EmbeddingTable t(h, w, 2, v);
            const auto out = adapt_table(t, PatchGrid{h, w});
            for (std::size_t i = 0; i < v.size(); ++i) worst_identity = std::max(worst_identity, std::abs(out.values()[i] - v[i]));
        }
    double worst_ramp = 0.0;
    int samples = 0;
    for (int trial = 0; trial < 40; ++trial) {
        const int h = 4 + static_cast<int>(uniform_index(rng, 13)), w = 4 + static_cast<int>(uniform_index(rng, 13));
        const double a = uniform01(rng) * 4 - 2, b = uniform01(rng) * 4 - 2, c = uniform01(rng) * 10 - 5;
        const auto f = [&](int r, int col) { return a * r + b * col + c; };
        EmbeddingTable t(static_cast<std::size_t>(h), static_cast<std::size_t>(w), 1);
        for (int r = 0; r < h; ++r)
            for (int col = 0; col < w; ++col) t.at(r, col)[0] = f(r, col);
        for (int k = 0; k < 50; ++k) {
            // interior: every tap lands inside the table
            const double sy = 1.0 + uniform01(rng) * (h - 3.0), sx = 1.0 + uniform01(rng) * (w - 3.0);
            const NormCoord p{(sx + 0.5) / w * 2.0 - 1.0, (sy + 0.5) / h * 2.0 - 1.0};
            const double got = bicubic_sample(t, p)[0];
            const double ref = oracle::interp2(f, h, w, p.y, p.x, -0.5);
            worst_ramp = std::max({worst_ramp, std::abs(got - ref), std::abs(got - f(0, 0) - a * sy - b * sx)});
            ++samples;
        }
    }
    const bool ok = worst_identity <= 1e-9 && worst_ramp <= 1e-9;
    return {ok, fmt("identity max err %.3g over 256 sizes; ramp max err %.3g over %d interior samples", worst_identity,
                    worst_ramp, samples)};
}

// ---- AC9 ----------------------------------------------------------------

Outcome ac9() {
    const auto t0 = Clock::now();
    const auto base = load_config(source_path("configs/default.json"));
    const FallbackJudge judge;
    int wins = 0;
    double margin = 0.0;
    for (std::uint64_t seed = 1; seed <= 20; ++seed) {
        ExperimentConfig on = base;
        on.seed = seed;
        ExperimentConfig off = on;
        off.curriculum_enabled = false;
        const auto ds = synthesize_dataset(on);
        const auto a = run_experiment(on, ds, 300, judge);
        const auto b = run_experiment(off, ds, 300, judge);
        const double sa = a.log.records.back().mean_skill, sb = b.log.records.back().mean_skill;
        if (sa >= sb) ++wins;
        margin += sa - sb;
    }
    const auto pilot = load_config(source_path("configs/pilot.json"));
    const auto pr = run_experiment(pilot, synthesize_dataset(pilot), 200, judge);
    int first = -1;
    for (const auto& r : pr.log.records)
        if (r.frac_groups_acc_gt_90 > 0.5) {
            first = r.iteration;
            break;
        }
    const double secs = seconds_since(t0);
    const bool ok = wins >= 16 && first >= 0 && secs < 300.0;
    return {ok, fmt("curriculum on >= off in %d/20 seeds (mean margin %.4f); pilot passes 0.5 high-accuracy share at "
                    "iteration %d; %.1f s",
                    wins, margin / 20.0, first, secs)};
}

// ---- AC10 ---------------------------------------------------------------

Outcome ac10() {
    Rng rng(derive_seed(20240611, 10));
    double worst_sum = 0.0;
    int degenerate = 0, degenerate_zero = 0;
    for (int t = 0; t < 10000; ++t) {
        const auto g = 2 + uniform_index(rng, 15);
        std::vector<double> r(g);
        const auto kind = uniform_index(rng, 4);
        for (auto& x : r) {
            if (kind == 0) x = 0.0;
            else if (kind == 1) x = 1.0;
            else if (kind == 2) x = static_cast<double>(uniform_index(rng, 2));
            else x = uniform01(rng);
        }
        const auto adv = group_advantages(r);
        worst_sum = std::max(worst_sum, std::abs(std::accumulate(adv.begin(), adv.end(), 0.0)));
        if (std::all_of(r.begin(), r.end(), [&](double x) { return x == r[0]; })) {
            ++degenerate;
            if (std::all_of(adv.begin(), adv.end(), [](double x) { return x == 0.0; })) ++degenerate_zero;
        }
    }
    return {worst_sum <= 1e-12 && degenerate == degenerate_zero && degenerate > 0,
            fmt("max |sum| = %.3g; %d/%d uniform groups all zero", worst_sum, degenerate_zero, degenerate)};
}

}  // namespace

int main() {
    const std::vector<std::pair<const char*, std::function<Outcome()>>> criteria{
        {"AC1 reward fixtures", ac1},       {"AC2 ocr edit-distance oracle", ac2},
        {"AC3 43 vs 43.0", ac3},            {"AC4 iou and grounding", ac4},
        {"AC5 expansion controller", ac5},  {"AC6 schedulers vs brute force", ac6},
        {"AC7 gradient weighting", ac7},    {"AC8 bicubic identity and ramps", ac8},
        {"AC9 curriculum acceleration", ac9}, {"AC10 group advantages", ac10},
    };
    int failed = 0;
    for (const auto& [name, fn] : criteria) {
        Outcome o;
        try {
            o = fn();
        } catch (const std::exception& e) {
            o = {false, std::string("threw: ") + e.what()};
        }
        std::cout << (o.pass ? "PASS " : "FAIL ") << name << ": " << o.detail << std::endl;
        failed += o.pass ? 0 : 1;
    }
    return failed == 0 ? 0 : 1;
}
