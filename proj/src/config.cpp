#include "rlcs/config.hpp"

#include <cmath>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <set>
#include <sstream>

#include <json.hpp>

#include "rlcs/error.hpp"

namespace rlcs {

using json = nlohmann::json;

namespace {

// Reads keys out of one JSON object and rejects whatever is left unread.
class StrictObject {
public:
    StrictObject(const json& j, std::string path) : j_(j), path_(std::move(path)) {
        if (!j_.is_object()) throw Error(Errc::config_invalid, path_ + " must be a JSON object");
    }
    StrictObject(const StrictObject&) = delete;
    StrictObject& operator=(const StrictObject&) = delete;

    void finish() const {
        for (const auto& [key, _] : j_.items())
            if (!seen_.contains(key)) throw Error(Errc::config_invalid, "unknown config key " + path_ + "." + key);
    }

    template <class T>
    void read(const char* key, T& out) {
        seen_.insert(key);
        if (!j_.contains(key)) return;
        try {
            out = j_.at(key).get<T>();
        } catch (const json::exception& e) {
            throw Error(Errc::config_invalid, "config key " + path_ + "." + key + ": " + e.what());
        }
    }

    const json* child(const char* key) {
        seen_.insert(key);
        return j_.contains(key) ? &j_.at(key) : nullptr;
    }

    std::string path(const char* key) const { return path_ + "." + key; }

private:
    const json& j_;
    std::string path_;
    std::set<std::string, std::less<>> seen_;
};

template <class E>
E enum_from(const std::string& value, std::initializer_list<std::pair<const char*, E>> names, const std::string& key) {
    for (const auto& [n, e] : names)
        if (value == n) return e;
    throw Error(Errc::config_invalid, "config key " + key + ": unsupported value \"" + value + "\"");
}

template <class E>
std::string enum_to(E e, std::initializer_list<std::pair<const char*, E>> names) {
    for (const auto& [n, v] : names)
        if (v == e) return n;
    return "";
}

const std::initializer_list<std::pair<const char*, OnlineSignal>> signal_names{{"fraction", OnlineSignal::fraction},
                                                                                {"pass_at_k", OnlineSignal::pass_at_k}};
const std::initializer_list<std::pair<const char*, GroundingMatch>> match_names{{"greedy", GroundingMatch::greedy},
                                                                                 {"optimal", GroundingMatch::optimal}};
const std::initializer_list<std::pair<const char*, CostMode>> cost_names{{"linear", CostMode::linear},
                                                                          {"quadratic", CostMode::quadratic}};

void require(bool ok, const std::string& what) {
    if (!ok) throw Error(Errc::config_invalid, what);
}

}  // namespace

void ExperimentConfig::validate() const {
    require(batch >= 1, "batch must be >= 1");
    require(group >= 2, "group must be >= 2");
    require(iterations >= 0, "iterations must be >= 0");
    require(threads >= 1, "threads must be >= 1");
    curriculum.validate();
    expansion.validate();
    require(reward.rtol_math > 0.0 && reward.rtol_chart > 0.0, "reward tolerances must be positive");
    require(reward.tau > 0.0 && reward.tau < 1.0, "reward tau must lie in (0,1)");
    require(reward.style.mixed_script_ratio >= 0.0 && reward.style.mixed_script_ratio <= 1.0,
            "style mixed_script_ratio must lie in [0,1]");
    require(reward.style.max_repeat_fraction >= 0.0 && reward.style.max_repeat_fraction <= 1.0,
            "style max_repeat_fraction must lie in [0,1]");
    require(reward.style.min_repeat_len >= 1, "style min_repeat_len must be >= 1");
    require(success_threshold > 0.0 && success_threshold <= 1.0, "success threshold must lie in (0,1]");
    require(scheduler.ranks >= 1, "scheduler ranks must be >= 1");
    require(scheduler.capacity >= 1, "scheduler capacity must be >= 1");
    require(learner.eta >= 0.0 && std::isfinite(learner.eta), "learner eta must be >= 0");
    require(learner.length_cap >= 1, "learner length_cap must be >= 1");
    require(learner.length.base >= 1.0 && learner.length.slope >= 0.0 && learner.length.sigma >= 0.0,
            "learner length model out of range");
    require(learner.truncation_penalty >= 0.0 && learner.truncation_penalty <= 1.0,
            "truncation penalty must lie in [0,1]");
    require(judge.backend == "fallback" || judge.backend == "stub" || judge.backend == "remote",
            "judge backend must be fallback, stub or remote");
    require(judge.timeout_ms >= 1, "judge timeout must be positive");
    require(judge.retries >= 0, "judge retries must be >= 0");
    require(dataset.size >= 1, "dataset size must be >= 1");
    require(dataset.skill_spread >= 0.0, "dataset skill spread must be >= 0");
    require(dataset.offline_k >= 1, "dataset offline_k must be >= 1");
    require(dataset.human_label_fraction >= 0.0 && dataset.human_label_fraction <= 1.0,
            "dataset human label fraction must lie in [0,1]");
    require(!dataset.domains.empty(), "dataset domains must be nonempty");
    for (const auto& d : dataset.domains) {
        try {
            parse_domain(d);
        } catch (const Error&) {
            throw Error(Errc::config_invalid, "dataset domain \"" + d + "\" is unknown");
        }
    }
}

ExperimentConfig parse_config(std::string_view json_text) {
    json root;
    try {
        root = json::parse(json_text);
    } catch (const json::parse_error& e) {
        throw Error(Errc::config_invalid, std::string("config is not valid JSON: ") + e.what());
    }
    ExperimentConfig cfg;
    {
        StrictObject top(root, "config");
        top.read("seed", cfg.seed);
        top.read("batch", cfg.batch);
        top.read("group", cfg.group);
        top.read("iterations", cfg.iterations);
        top.read("threads", cfg.threads);
        top.read("success_threshold", cfg.success_threshold);

        if (const json* c = top.child("curriculum")) {
            StrictObject o(*c, top.path("curriculum"));
            auto& cs = cfg.curriculum;
            o.read("enabled", cfg.curriculum_enabled);
            o.read("tier_edges", cs.tier_edges);
            o.read("tent", cs.tent);
            o.read("blend_factor", cs.blend_factor);
            o.read("easy_share_threshold", cs.easy_share_threshold);
            o.read("easy_damping", cs.easy_damping);
            std::string signal = enum_to(cs.online_signal, signal_names);
            o.read("online_signal", signal);
            cs.online_signal = enum_from(signal, signal_names, o.path("online_signal"));
            cs.tier_weights = cs.tent;
            o.finish();
        }
        if (const json* c = top.child("expansion")) {
            StrictObject o(*c, top.path("expansion"));
            o.read("enabled", cfg.expansion_enabled);
            o.read("beta", cfg.expansion.beta);
            o.read("cap", cfg.expansion.cap);
            o.read("initial_ema", cfg.expansion.ema);
            o.finish();
        }
        if (const json* c = top.child("reward")) {
            StrictObject o(*c, top.path("reward"));
            o.read("rtol_math", cfg.reward.rtol_math);
            o.read("rtol_chart", cfg.reward.rtol_chart);
            o.read("tau", cfg.reward.tau);
            std::string match = enum_to(cfg.reward.grounding_match, match_names);
            o.read("grounding_match", match);
            cfg.reward.grounding_match = enum_from(match, match_names, o.path("grounding_match"));
            if (const json* s = o.child("style")) {
                StrictObject so(*s, o.path("style"));
                so.read("mixed_script_ratio", cfg.reward.style.mixed_script_ratio);
                so.read("max_repeat_fraction", cfg.reward.style.max_repeat_fraction);
                so.read("min_repeat_len", cfg.reward.style.min_repeat_len);
                so.finish();
            }
            o.finish();
        }
        if (const json* c = top.child("scheduler")) {
            StrictObject o(*c, top.path("scheduler"));
            o.read("ranks", cfg.scheduler.ranks);
            o.read("capacity", cfg.scheduler.capacity);
            std::string mode = enum_to(cfg.scheduler.cost_mode, cost_names);
            o.read("cost_mode", mode);
            cfg.scheduler.cost_mode = enum_from(mode, cost_names, o.path("cost_mode"));
            o.finish();
        }
        if (const json* c = top.child("learner")) {
            StrictObject o(*c, top.path("learner"));
            o.read("eta", cfg.learner.eta);
            o.read("length_cap", cfg.learner.length_cap);
            o.read("length_base", cfg.learner.length.base);
            o.read("length_slope", cfg.learner.length.slope);
            o.read("length_sigma", cfg.learner.length.sigma);
            o.read("truncation_penalty", cfg.learner.truncation_penalty);
            o.finish();
        }
        if (const json* c = top.child("judge")) {
            StrictObject o(*c, top.path("judge"));
            o.read("backend", cfg.judge.backend);
            o.read("url", cfg.judge.url);
            o.read("timeout_ms", cfg.judge.timeout_ms);
            o.read("retries", cfg.judge.retries);
            o.read("stub_table", cfg.judge.stub_table);
            o.read("cache", cfg.judge.cache);
            std::map<std::string, std::string> prompts;
            o.read("prompts", prompts);
            if (!prompts.empty()) cfg.judge.prompts = {prompts.begin(), prompts.end()};
            o.finish();
        }
        if (const json* c = top.child("dataset")) {
            StrictObject o(*c, top.path("dataset"));
            o.read("size", cfg.dataset.size);
            o.read("skill_mean", cfg.dataset.skill_mean);
            o.read("skill_spread", cfg.dataset.skill_spread);
            o.read("offline_k", cfg.dataset.offline_k);
            o.read("human_label_fraction", cfg.dataset.human_label_fraction);
            o.read("domains", cfg.dataset.domains);
            o.finish();
        }
        top.finish();
    }
    cfg.validate();
    return cfg;
}

ExperimentConfig load_config(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw Error(Errc::io_error, "cannot open config " + path);
    std::ostringstream ss;
    ss << in.rdbuf();
    return parse_config(ss.str());
}

std::string serialize_config(const ExperimentConfig& cfg) {
    const auto& cs = cfg.curriculum;
    json j = {
        {"seed", cfg.seed},
        {"batch", cfg.batch},
        {"group", cfg.group},
        {"iterations", cfg.iterations},
        {"threads", cfg.threads},
        {"success_threshold", cfg.success_threshold},
        {"curriculum",
         {{"enabled", cfg.curriculum_enabled},
          {"tier_edges", cs.tier_edges},
          {"tent", cs.tent},
          {"blend_factor", cs.blend_factor},
          {"easy_share_threshold", cs.easy_share_threshold},
          {"easy_damping", cs.easy_damping},
          {"online_signal", enum_to(cs.online_signal, signal_names)}}},
        {"expansion",
         {{"enabled", cfg.expansion_enabled},
          {"beta", cfg.expansion.beta},
          {"cap", cfg.expansion.cap},
          {"initial_ema", cfg.expansion.ema}}},
        {"reward",
         {{"rtol_math", cfg.reward.rtol_math},
          {"rtol_chart", cfg.reward.rtol_chart},
          {"tau", cfg.reward.tau},
          {"grounding_match", enum_to(cfg.reward.grounding_match, match_names)},
          {"style",
           {{"mixed_script_ratio", cfg.reward.style.mixed_script_ratio},
            {"max_repeat_fraction", cfg.reward.style.max_repeat_fraction},
            {"min_repeat_len", cfg.reward.style.min_repeat_len}}}}},
        {"scheduler",
         {{"ranks", cfg.scheduler.ranks},
          {"capacity", cfg.scheduler.capacity},
          {"cost_mode", enum_to(cfg.scheduler.cost_mode, cost_names)}}},
        {"learner",
         {{"eta", cfg.learner.eta},
          {"length_cap", cfg.learner.length_cap},
          {"length_base", cfg.learner.length.base},
          {"length_slope", cfg.learner.length.slope},
          {"length_sigma", cfg.learner.length.sigma},
          {"truncation_penalty", cfg.learner.truncation_penalty}}},
        {"judge",
         {{"backend", cfg.judge.backend},
          {"url", cfg.judge.url},
          {"timeout_ms", cfg.judge.timeout_ms},
          {"retries", cfg.judge.retries},
          {"stub_table", cfg.judge.stub_table},
          {"cache", cfg.judge.cache},
          {"prompts", std::map<std::string, std::string>(cfg.judge.prompts.begin(), cfg.judge.prompts.end())}}},
        {"dataset",
         {{"size", cfg.dataset.size},
          {"skill_mean", cfg.dataset.skill_mean},
          {"skill_spread", cfg.dataset.skill_spread},
          {"offline_k", cfg.dataset.offline_k},
          {"human_label_fraction", cfg.dataset.human_label_fraction},
          {"domains", cfg.dataset.domains}}},
    };
    return j.dump(2);
}

std::shared_ptr<const JudgeClient> make_judge(const JudgeConfig& cfg, const std::string& base_dir) {
    std::shared_ptr<const JudgeClient> judge;
    const char* env_url = std::getenv("RLCS_JUDGE_URL");
    if ((env_url && *env_url) || cfg.backend == "remote") {
        RemoteJudgeOptions opts;
        opts.url = (env_url && *env_url) ? std::string(env_url) : cfg.url;
        opts.timeout = std::chrono::milliseconds(cfg.timeout_ms);
        opts.retries = cfg.retries;
        opts.prompts = cfg.prompts;
        judge = std::make_shared<RemoteJudge>(std::move(opts));
    } else if (cfg.backend == "stub") {
        if (cfg.stub_table.empty()) {
            judge = std::make_shared<StubJudge>();
        } else {
            std::filesystem::path p(cfg.stub_table);
            if (p.is_relative()) p = std::filesystem::path(base_dir) / p;
            judge = std::make_shared<StubJudge>(StubJudge::load(p.string()));
        }
    } else if (cfg.backend == "fallback") {
        judge = std::make_shared<FallbackJudge>();
    } else {
        throw Error(Errc::config_invalid, "unknown judge backend " + cfg.backend);
    }
    if (cfg.cache) judge = std::make_shared<CachingJudge>(std::move(judge));
    return judge;
}

}  // namespace rlcs
