#include "rlcs/rollout_sim.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdio>
#include <exception>
#include <fstream>
#include <map>
#include <mutex>
#include <numeric>
#include <sstream>
#include <thread>

#include <json.hpp>

#include "rlcs/error.hpp"
#include "rlcs/text.hpp"

namespace rlcs {

using json = nlohmann::json;

namespace {

std::string format_number(double v) {
    char buf[64];
    std::snprintf(buf, sizeof buf, "%.12g", v);
    return buf;
}

// first `n` surrogate tokens of plain text (no special tokens expected)
std::string truncate_tokens(std::string_view s, std::size_t n) {
    std::size_t count = 0;
    bool in_word = false;
    const auto cps = text::decode_utf8(s);
    for (std::size_t i = 0; i < cps.size(); ++i) {
        const char32_t c = cps[i];
        const bool space = c == ' ' || c == '\t' || c == '\n' || c == '\r';
        bool starts = false;
        if (space) {
            in_word = false;
        } else if (text::is_cjk_ideograph(c)) {
            starts = true;
            in_word = false;
        } else if (!in_word) {
            starts = true;
            in_word = true;
        }
        if (starts && ++count > n) return text::encode_utf8(std::u32string_view(cps).substr(0, i));
    }
    return std::string(s);
}

std::pair<std::optional<double>, std::string> split_leading_number(const std::string& s) {
    std::size_t i = 0;
    if (i < s.size() && (s[i] == '-' || s[i] == '+')) ++i;
    while (i < s.size() && ((s[i] >= '0' && s[i] <= '9') || s[i] == '.')) ++i;
    auto v = parse_number(s.substr(0, i));
    if (!v) return {std::nullopt, s};
    return {v, s.substr(i)};
}

std::string random_word(Rng& rng, std::size_t min_len, std::size_t max_len) {
    const std::size_t len = min_len + uniform_index(rng, max_len - min_len + 1);
    std::string w;
    for (std::size_t i = 0; i < len; ++i) w.push_back(static_cast<char>('a' + uniform_index(rng, 26)));
    return w;
}

json box_json(const Box& b) { return json::array({b.x1, b.y1, b.x2, b.y2}); }

std::string synthesize_reference(Domain domain, Rng& rng) {
    switch (domain) {
        case Domain::math:
        case Domain::vqa:
        case Domain::video:
            return std::to_string(uniform_index(rng, 200));
        case Domain::chart:
            if (uniform_index(rng, 4) == 0) return std::to_string(1990 + uniform_index(rng, 35));
            return format_number(static_cast<double>(10 + uniform_index(rng, 900)) / 10.0);
        case Domain::physics:
            return format_number(static_cast<double>(1 + uniform_index(rng, 500)) / 10.0) + " m/s";
        case Domain::chemistry:
            return format_number(static_cast<double>(1 + uniform_index(rng, 100)) / 100.0) + " mol";
        case Domain::ocr:
            return random_word(rng, 4, 10) + " " + random_word(rng, 3, 8);
        case Domain::spatial: {
            static constexpr const char* words[] = {"left", "right", "above", "below", "behind", "front"};
            return words[uniform_index(rng, 6)];
        }
        case Domain::long_document:
        case Domain::geoguess:
            return random_word(rng, 5, 9);
        case Domain::grounding: {
            json boxes = json::array();
            const std::size_t n = 1 + uniform_index(rng, 3);
            for (std::size_t k = 0; k < n; ++k) {
                // disjoint columns keep boxes distinct
                const double x1 = 320.0 * static_cast<double>(k) + static_cast<double>(uniform_index(rng, 100));
                const double y1 = static_cast<double>(uniform_index(rng, 700));
                const double w = 40.0 + static_cast<double>(uniform_index(rng, 160));
                const double h = 40.0 + static_cast<double>(uniform_index(rng, 200));
                boxes.push_back(box_json({x1, y1, x1 + w, y1 + h}));
            }
            return boxes.dump();
        }
        case Domain::gui_agent: {
            const double x1 = static_cast<double>(uniform_index(rng, 800));
            const double y1 = static_cast<double>(uniform_index(rng, 800));
            return json{{"action", "click"}, {"box", box_json({x1, y1, x1 + 100.0, y1 + 60.0})}}.dump();
        }
    }
    return "0";
}

Box shift_away(const Box& b) {
    const double w = b.x2 - b.x1;
    if (b.x2 + w + 10.0 <= 1000.0) return {b.x1 + w + 10.0, b.y1, b.x2 + w + 10.0, b.y2};
    return {b.x1 - w - 10.0, b.y1, b.x2 - w - 10.0, b.y2};
}

template <class Fn>
void parallel_for(std::size_t n, int threads, Fn&& fn) {
    if (threads <= 1 || n < 2) {
        for (std::size_t i = 0; i < n; ++i) fn(i);
        return;
    }
    std::atomic<std::size_t> next{0};
    std::exception_ptr error;
    std::mutex error_mutex;
    std::vector<std::thread> pool;
    const auto workers = std::min<std::size_t>(static_cast<std::size_t>(threads), n);
    for (std::size_t t = 0; t < workers; ++t) {
        pool.emplace_back([&] {
            for (std::size_t i = next++; i < n; i = next++) {
                try {
                    fn(i);
                } catch (...) {
                    std::lock_guard lock(error_mutex);
                    if (!error) error = std::current_exception();
                }
            }
        });
    }
    for (auto& th : pool) th.join();
    if (error) std::rethrow_exception(error);
}

}  // namespace

std::int64_t draw_think_length(const LengthModel& model, double p, Rng& rng) {
    const double mean = model.base + model.slope * (1.0 - p);
    const double z = standard_normal(rng);
    const double len = mean * std::exp(model.sigma * z - 0.5 * model.sigma * model.sigma);
    return std::max<std::int64_t>(1, std::llround(len));
}

double truncated_success_probability(double p, double penalty) { return std::clamp(p * penalty, 0.0, 1.0); }

StructuredResponse force_answer(StructuredResponse resp, std::int64_t length_cap) {
    if (length_cap < 1) throw Error(Errc::invalid_argument, "length cap must be positive");
    const auto cap = static_cast<std::size_t>(length_cap);
    if (resp.think_tokens < cap) return resp;
    resp.think_content = truncate_tokens(resp.think_content, cap);
    resp.think_tokens = cap;
    resp.truncated = true;
    if (text::trim(resp.answer_content).empty()) resp.answer_content = "[no answer before truncation]";
    resp.raw_text = render_response(resp.think_content, resp.answer_content);
    resp.token_length = resp.think_tokens + surrogate_token_count(resp.answer_content) + 4;
    return resp;
}

std::string synthesize_answer(Domain domain, const std::string& reference, bool correct, Rng& rng) {
    if (correct) return reference;
    const double step = static_cast<double>(1 + uniform_index(rng, 9));
    switch (domain) {
        case Domain::ocr: {
            auto cps = text::decode_utf8(reference);
            if (cps.empty()) return "x";
            const std::size_t edits = std::max<std::size_t>(1, (cps.size() * 3 + 9) / 10);
            std::vector<std::size_t> pos(cps.size());
            std::iota(pos.begin(), pos.end(), std::size_t{0});
            for (std::size_t k = 0; k < edits && k < pos.size(); ++k) {
                std::swap(pos[k], pos[k + uniform_index(rng, pos.size() - k)]);
                const char32_t old = cps[pos[k]];
                char32_t repl = U'a' + static_cast<char32_t>(uniform_index(rng, 26));
                if (repl == old) repl = old == U'z' ? U'a' : old + 1;
                cps[pos[k]] = repl;
            }
            return text::encode_utf8(cps);
        }
        case Domain::grounding: {
            json out = json::array();
            for (const auto& b : parse_boxes(reference)) out.push_back(box_json(shift_away(b)));
            return out.dump();
        }
        case Domain::gui_agent: {
            auto j = json::parse(reference);
            j["action"] = j.value("action", std::string("click")) == "scroll" ? "click" : "scroll";
            return j.dump();
        }
        default: {
            auto [value, suffix] = split_leading_number(reference);
            if (value) {
                const double wrong = *value + step * std::max(1.0, std::abs(*value) * 0.1);
                return format_number(wrong) + suffix;
            }
            return "not " + reference;
        }
    }
}

RolloutGroup rollout_group(const TaskSample& sample, double p, int group_size, std::int64_t length_cap,
                           const SyntheticLearner& learner, const RolloutEnv& env, Rng& rng) {
    if (group_size < 2) throw Error(Errc::invalid_argument, "group size must be >= 2");
    const Domain domain = parse_domain(sample.domain);
    RolloutGroup g;
    g.sample_id = sample.id;
    g.responses.reserve(static_cast<std::size_t>(group_size));
    g.rewards.reserve(static_cast<std::size_t>(group_size));
    const std::uint64_t base = rng();
    const std::string think = "working through " + sample.id;
    for (int k = 0; k < group_size; ++k) {
        // one stream per response keeps draws aligned when the cap changes
        Rng r(derive_seed(base, static_cast<std::uint64_t>(k)));
        const std::int64_t len = draw_think_length(learner.length_model, p, r);
        const double u = uniform01(r);
        const bool over = len >= length_cap;
        const double p_eff = over ? truncated_success_probability(p, learner.truncation_penalty) : p;
        const std::string payload = synthesize_answer(domain, sample.reference, u < p_eff, r);

        StructuredResponse resp;
        resp.think_content = think;
        resp.answer_content = std::string(tokens::box_begin) + payload + std::string(tokens::box_end);
        resp.raw_text = render_response(resp.think_content, resp.answer_content);
        resp.think_tokens = static_cast<std::size_t>(len);
        resp.token_length = resp.think_tokens + surrogate_token_count(resp.answer_content) + 4;
        if (over) resp = force_answer(std::move(resp), length_cap);

        const RewardRequest req{domain, sample.prompt, sample.reference, resp.raw_text, true};
        const double reward = score(req, env.judge, env.reward).score;
        g.rewards.push_back(reward);
        if (reward >= env.success_threshold) ++g.correct_count;
        g.responses.push_back(std::move(resp));
    }
    g.valid = g.correct_count > 0 && g.correct_count < group_size;
    return g;
}

std::vector<double> group_advantages(std::span<const double> rewards, double eps) {
    if (rewards.empty()) throw Error(Errc::invalid_argument, "group advantages need at least one reward");
    const auto n = static_cast<double>(rewards.size());
    const double mean = std::accumulate(rewards.begin(), rewards.end(), 0.0) / n;
    std::vector<double> dev(rewards.size());
    double dev_sum = 0.0;
    for (std::size_t i = 0; i < rewards.size(); ++i) {
        dev[i] = rewards[i] - mean;
        dev_sum += dev[i];
    }
    // second pass removes the rounding left in the mean
    const double correction = dev_sum / n;
    double sq = 0.0;
    for (auto& d : dev) {
        d -= correction;
        sq += d * d;
    }
    const double sd = std::sqrt(sq / n);
    if (sd == 0.0) return std::vector<double>(rewards.size(), 0.0);
    for (auto& d : dev) d /= (sd + eps);
    return dev;
}

SyntheticLearner train_step(SyntheticLearner learner, std::span<const std::size_t> trained) {
    for (std::size_t idx : trained) {
        if (idx >= learner.skill.size()) throw Error(Errc::invalid_argument, "trained index outside learner");
        double& p = learner.skill[idx];
        p = std::clamp(p + learner.learn_rate * p * (1.0 - p), 0.0, 1.0);
    }
    return learner;
}

Selection select_informative(std::span<const RolloutGroup> groups, std::size_t batch, int group_size) {
    std::vector<GroupSummary> summaries;
    summaries.reserve(groups.size());
    for (const auto& g : groups) summaries.push_back({g.sample_id, g.correct_count});
    return select_informative(std::span<const GroupSummary>(summaries), batch, group_size);
}

std::string MetricsLog::to_csv() const {
    std::string out = "iteration,mean_skill,not_valid_rate,ema,valid_fill,reward_mean";
    for (int t = 0; t < tier_count; ++t) out += ",tier_pop_" + std::to_string(t);
    out += '\n';
    for (const auto& r : records) {
        out += std::to_string(r.iteration);
        for (double v : {r.mean_skill, r.not_valid_rate, r.ema, r.valid_fill, r.reward_mean}) {
            out += ',';
            out += format_number(v);
        }
        for (auto pop : r.tier_pops) out += "," + std::to_string(pop);
        out += '\n';
    }
    return out;
}

std::string MetricsLog::to_jsonl() const {
    std::string out;
    for (const auto& r : records) {
        json j = {{"event", "iteration"},
                  {"iteration", r.iteration},
                  {"mean_skill", r.mean_skill},
                  {"not_valid_rate", r.not_valid_rate},
                  {"ema", r.ema},
                  {"valid_fill", r.valid_fill},
                  {"reward_mean", r.reward_mean},
                  {"tier_pops", r.tier_pops},
                  {"tier_weights", r.tier_weights},
                  {"rollouts", r.rollouts},
                  {"valid_groups", r.valid_groups},
                  {"selected", r.selected},
                  {"frac_groups_acc_gt_90", r.frac_groups_acc_gt_90},
                  {"frac_skill_gt_90", r.frac_skill_gt_90},
                  {"truncation_rate", r.truncation_rate}};
        out += j.dump();
        out += '\n';
    }
    return out;
}

Dataset synthesize_dataset(const ExperimentConfig& cfg) {
    Rng rng(derive_seed(cfg.seed, 0xDA7A5E7ULL));
    const auto& cur = cfg.curriculum;
    Dataset ds;
    std::map<std::string, double> pass_rates;
    std::map<std::string, int> human;
    for (std::size_t i = 0; i < cfg.dataset.size; ++i) {
        const double z = standard_normal(rng);
        const double p = 1.0 / (1.0 + std::exp(-(cfg.dataset.skill_mean + cfg.dataset.skill_spread * z)));
        const std::string& dom = cfg.dataset.domains[i % cfg.dataset.domains.size()];
        char id[32];
        std::snprintf(id, sizeof id, "s%05zu", i);
        TaskSample s;
        s.id = id;
        s.domain = dom;
        s.prompt = "task " + s.id + " (" + dom + ")";
        s.reference = synthesize_reference(parse_domain(dom), rng);

        int passes = 0;
        for (int k = 0; k < cfg.dataset.offline_k; ++k) passes += uniform01(rng) < p ? 1 : 0;
        pass_rates[s.id] = static_cast<double>(passes) / cfg.dataset.offline_k;
        if (uniform01(rng) < cfg.dataset.human_label_fraction) {
            const int noise = static_cast<int>(uniform_index(rng, 3)) - 1;
            human[s.id] = std::clamp(bucket(cur, p) + noise, 0, cur.tier_count() - 1);
        }
        ds.samples.push_back(std::move(s));
        ds.skill.push_back(p);
    }
    const auto tiers = grade_offline(cur, pass_rates, human);
    for (auto& s : ds.samples) {
        s.offline_tier = tiers.at(s.id);
        s.blended_pass_rate = tier_midpoint(cur, s.offline_tier);
        s.tier = bucket(cur, s.blended_pass_rate);
    }
    return ds;
}

Dataset parse_dataset(std::string_view jsonl, const CurriculumState& curriculum) {
    Dataset ds;
    std::istringstream in{std::string(jsonl)};
    std::string line;
    std::size_t line_no = 0;
    const int t = curriculum.tier_count();
    while (std::getline(in, line)) {
        ++line_no;
        if (text::trim(line).empty()) continue;
        const std::string where = "dataset line " + std::to_string(line_no);
        try {
            const auto j = json::parse(line);
            TaskSample s;
            s.id = j.at("id").get<std::string>();
            s.domain = j.at("domain").get<std::string>();
            parse_domain(s.domain);
            s.prompt = j.at("prompt").get<std::string>();
            s.reference = j.at("reference").get<std::string>();
            std::optional<int> offline, human;
            std::optional<double> skill;
            if (j.contains("offline_tier") && !j["offline_tier"].is_null()) offline = j["offline_tier"].get<int>();
            if (j.contains("human_tier") && !j["human_tier"].is_null()) human = j["human_tier"].get<int>();
            if (j.contains("skill") && !j["skill"].is_null()) skill = j["skill"].get<double>();
            for (auto tier : {offline, human})
                if (tier && (*tier < 0 || *tier >= t))
                    throw Error(Errc::tier_out_of_range, where + ": tier " + std::to_string(*tier) + " out of range");
            if (skill && !(*skill >= 0.0 && *skill <= 1.0))
                throw Error(Errc::invalid_argument, where + ": skill outside [0,1]");
            int tier = bucket(curriculum, 0.5);
            if (offline && human)
                tier = (*offline + *human + 1) / 2;
            else if (offline)
                tier = *offline;
            else if (human)
                tier = *human;
            else if (skill)
                tier = bucket(curriculum, *skill);
            s.offline_tier = tier;
            s.blended_pass_rate = tier_midpoint(curriculum, tier);
            s.tier = bucket(curriculum, s.blended_pass_rate);
            ds.skill.push_back(skill.value_or(s.blended_pass_rate));
            ds.samples.push_back(std::move(s));
        } catch (const json::exception& e) {
            throw Error(Errc::invalid_argument, where + ": " + e.what());
        } catch (const Error& e) {
            if (e.code() == Errc::unknown_domain) throw Error(Errc::unknown_domain, where + ": " + e.what());
            throw;
        }
    }
    return ds;
}

Dataset load_dataset(const std::string& path, const CurriculumState& curriculum) {
    std::ifstream in(path);
    if (!in) throw Error(Errc::io_error, "cannot open dataset " + path);
    std::ostringstream ss;
    ss << in.rdbuf();
    return parse_dataset(ss.str(), curriculum);
}

std::string ExperimentResult::final_state_json() const {
    json samples_json = json::array();
    for (std::size_t i = 0; i < samples.size(); ++i) {
        const auto& s = samples[i];
        samples_json.push_back({{"id", s.id},
                                {"domain", s.domain},
                                {"offline_tier", s.offline_tier},
                                {"tier", s.tier},
                                {"blended_pass_rate", s.blended_pass_rate},
                                {"exposures", s.exposures},
                                {"skill", i < learner.skill.size() ? learner.skill[i] : 0.0}});
    }
    json j = {{"expansion",
               {{"ema", expansion.ema},
                {"beta", expansion.beta},
                {"cap", expansion.cap},
                {"last_not_valid_rate", expansion.last_not_valid_rate}}},
              {"tier_weights", curriculum.tier_weights},
              {"samples", samples_json}};
    return j.dump(2);
}

ExperimentResult run_experiment(const ExperimentConfig& cfg, Dataset dataset, int iterations,
                                const JudgeClient& judge) {
    cfg.validate();
    if (iterations < 0) throw Error(Errc::config_invalid, "iterations must be >= 0");
    if (dataset.samples.empty()) throw Error(Errc::config_invalid, "dataset is empty");
    if (dataset.skill.size() != dataset.samples.size())
        throw Error(Errc::config_invalid, "dataset skills do not match samples");

    ExperimentResult res;
    res.samples = std::move(dataset.samples);
    res.learner = {std::move(dataset.skill), cfg.learner.eta, cfg.learner.length, cfg.learner.truncation_penalty};
    res.expansion = cfg.expansion;
    res.curriculum = cfg.curriculum;
    res.log.tier_count = cfg.curriculum.tier_count();
    const RolloutEnv env{judge, cfg.reward, cfg.success_threshold};
    const int group = cfg.group;

    for (int it = 0; it < iterations; ++it) {
        const auto iter_salt = static_cast<std::uint64_t>(it) * 2;
        Rng draw_rng(derive_seed(cfg.seed, iter_salt + 1));
        const std::size_t want = cfg.expansion_enabled ? plan_rollout_count(cfg.batch, res.expansion) : cfg.batch;

        DrawResult draw;
        if (cfg.curriculum_enabled) {
            res.curriculum = reweight(std::move(res.curriculum), tier_populations(res.curriculum, res.samples));
            draw = draw_batch(res.curriculum, res.samples, want, draw_rng);
        } else {
            draw = draw_uniform(res.samples, want, draw_rng);
        }

        const std::uint64_t group_seed = derive_seed(cfg.seed, iter_salt + 2);
        std::vector<RolloutGroup> groups(draw.indices.size());
        parallel_for(groups.size(), cfg.threads, [&](std::size_t k) {
            const std::size_t idx = draw.indices[k];
            Rng g(derive_seed(group_seed, idx));
            groups[k] = rollout_group(res.samples[idx], res.learner.skill[idx], group, cfg.learner.length_cap,
                                      res.learner, env, g);
        });

        // single writer after the join
        const Selection sel = select_informative(std::span<const RolloutGroup>(groups), cfg.batch, group);
        if (cfg.expansion_enabled) {
            res.expansion = update_ema(res.expansion, compute_ratio(sel.not_valid_rate, res.expansion.cap));
            res.expansion.last_not_valid_rate = sel.not_valid_rate;
        }
        double reward_sum = 0.0;
        std::size_t reward_n = 0, truncated = 0, high_acc = 0;
        for (std::size_t k = 0; k < groups.size(); ++k) {
            const std::size_t idx = draw.indices[k];
            res.samples[idx] = grade_online(res.curriculum, std::move(res.samples[idx]), groups[k].correct_count, group);
            for (std::size_t r = 0; r < groups[k].rewards.size(); ++r) {
                reward_sum += groups[k].rewards[r];
                truncated += groups[k].responses[r].truncated ? 1 : 0;
                ++reward_n;
            }
            if (static_cast<double>(groups[k].correct_count) / group > 0.9) ++high_acc;
        }
        std::vector<std::size_t> trained;
        trained.reserve(sel.selected.size());
        for (std::size_t k : sel.selected) trained.push_back(draw.indices[k]);
        res.learner = train_step(std::move(res.learner), trained);

        MetricsRecord rec;
        rec.iteration = it;
        const auto& skill = res.learner.skill;
        rec.mean_skill = std::accumulate(skill.begin(), skill.end(), 0.0) / static_cast<double>(skill.size());
        rec.frac_skill_gt_90 = static_cast<double>(std::count_if(skill.begin(), skill.end(),
                                                                 [](double p) { return p > 0.9; })) /
                               static_cast<double>(skill.size());
        rec.not_valid_rate = sel.not_valid_rate;
        rec.ema = res.expansion.ema;
        rec.valid_fill = static_cast<double>(sel.selected.size()) / static_cast<double>(cfg.batch);
        rec.reward_mean = reward_n ? reward_sum / static_cast<double>(reward_n) : 0.0;
        rec.tier_pops = tier_populations(res.curriculum, res.samples);
        rec.rollouts = groups.size();
        rec.valid_groups = sel.valid_count;
        rec.selected = sel.selected.size();
        rec.frac_groups_acc_gt_90 = groups.empty() ? 0.0 : static_cast<double>(high_acc) / groups.size();
        rec.truncation_rate = reward_n ? static_cast<double>(truncated) / static_cast<double>(reward_n) : 0.0;
        rec.tier_weights = res.curriculum.tier_weights;
        res.log.records.push_back(std::move(rec));
    }
    return res;
}

}  // namespace rlcs
