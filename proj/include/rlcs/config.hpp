#pragma once

#include <cstdint>
#include <map>
#include <memory>
#include <string>
#include <vector>

#include "rlcs/curriculum.hpp"
#include "rlcs/expansion.hpp"
#include "rlcs/infra_sched.hpp"
#include "rlcs/judge.hpp"
#include "rlcs/reward.hpp"

namespace rlcs {

struct LengthModel {
    /// Mean think length is base + slope * (1 - p); lognormal spread sigma.
    double base = 300.0;
    double slope = 900.0;
    double sigma = 0.5;

    bool operator==(const LengthModel&) const = default;
};

struct LearnerConfig {
    double eta = 0.2;
    std::int64_t length_cap = 2048;
    LengthModel length;
    double truncation_penalty = 0.8;

    bool operator==(const LearnerConfig&) const = default;
};

struct SchedulerConfig {
    int ranks = 8;
    std::int64_t capacity = default_context_length;
    CostMode cost_mode = CostMode::linear;

    bool operator==(const SchedulerConfig&) const = default;
};

struct JudgeConfig {
    std::string backend = "fallback";  // fallback | stub | remote
    std::string url;
    std::int64_t timeout_ms = 10000;
    int retries = 2;
    std::string stub_table;  // JSON Lines path, relative paths resolve against the config file
    bool cache = false;
    std::map<std::string, std::string, std::less<>> prompts;

    bool operator==(const JudgeConfig&) const = default;
};

/// Parameters of the synthetic dataset used when no dataset file is given.
struct DatasetConfig {
    std::size_t size = 512;
    /// Latent skill p = logistic(skill_mean + skill_spread * z).
    double skill_mean = 0.0;
    double skill_spread = 2.0;
    /// Responses per sample in the simulated offline pass@k evaluation.
    int offline_k = 8;
    /// Fraction of samples carrying a (noisy) human difficulty label.
    double human_label_fraction = 0.3;
    std::vector<std::string> domains{"math", "chart", "ocr", "grounding", "vqa", "physics"};

    bool operator==(const DatasetConfig&) const = default;
};

struct ExperimentConfig {
    std::uint64_t seed = 1;
    std::size_t batch = 32;  // B
    int group = 8;           // G
    int iterations = 300;
    int threads = 1;

    bool curriculum_enabled = true;
    CurriculumState curriculum;

    bool expansion_enabled = true;
    ExpansionState expansion;

    RewardConfig reward;
    double success_threshold = 0.99;

    SchedulerConfig scheduler;
    LearnerConfig learner;
    JudgeConfig judge;
    DatasetConfig dataset;

    /// Throws config_invalid on any out-of-range field.
    void validate() const;

    bool operator==(const ExperimentConfig&) const = default;
};

/// Parse a JSON config document. Missing keys keep their defaults; unknown
/// keys and out-of-range values throw config_invalid.
ExperimentConfig parse_config(std::string_view json_text);
ExperimentConfig load_config(const std::string& path);
/// Canonical JSON serialisation; parse_config(serialize_config(c)) == c.
std::string serialize_config(const ExperimentConfig& cfg);

/// Build the judge selected by the config. RLCS_JUDGE_URL, when set,
/// forces the remote backend at that URL. `base_dir` resolves relative stub paths.
std::shared_ptr<const JudgeClient> make_judge(const JudgeConfig& cfg, const std::string& base_dir = ".");

}  // namespace rlcs
