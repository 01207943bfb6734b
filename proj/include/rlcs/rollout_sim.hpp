#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "rlcs/config.hpp"
#include "rlcs/curriculum.hpp"
#include "rlcs/expansion.hpp"
#include "rlcs/judge.hpp"
#include "rlcs/random.hpp"
#include "rlcs/response_parser.hpp"
#include "rlcs/reward.hpp"

namespace rlcs {

/// Synthetic policy: one latent pass probability per dataset sample.
struct SyntheticLearner {
    std::vector<double> skill;  // parallel to the dataset, each in [0,1]
    double learn_rate = 0.2;
    LengthModel length_model;
    double truncation_penalty = 0.8;
};

struct RolloutGroup {
    std::string sample_id;
    std::vector<StructuredResponse> responses;
    std::vector<double> rewards;
    int correct_count = 0;
    bool valid = false;
};

/// Everything a rollout needs to score its responses.
struct RolloutEnv {
    const JudgeClient& judge;
    const RewardConfig& reward;
    double success_threshold = 0.99;
};

/// Think length drawn from the learner's length model for pass probability p.
std::int64_t draw_think_length(const LengthModel& model, double p, Rng& rng);

/// Success probability of a force-closed response.
double truncated_success_probability(double p, double penalty);

/// Close an over-long think section at the cap by inserting </think>. No-op
/// below the cap. The answer segment is kept (a placeholder is produced when empty).
StructuredResponse force_answer(StructuredResponse resp, std::int64_t length_cap);

/// The answer text a synthetic response gives: the reference when correct,
/// otherwise a domain-appropriate wrong payload.
std::string synthesize_answer(Domain domain, const std::string& reference, bool correct, Rng& rng);

RolloutGroup rollout_group(const TaskSample& sample, double p, int group_size, std::int64_t length_cap,
                           const SyntheticLearner& learner, const RolloutEnv& env, Rng& rng);

/// GRPO advantages (r - mean) / (std + eps) with population std; zero when std is 0.
std::vector<double> group_advantages(std::span<const double> rewards, double eps = 1e-6);

/// Logistic improvement p += eta * p * (1 - p) on every listed sample index.
SyntheticLearner train_step(SyntheticLearner learner, std::span<const std::size_t> trained);

Selection select_informative(std::span<const RolloutGroup> groups, std::size_t batch, int group_size);

struct MetricsRecord {
    int iteration = 0;
    double mean_skill = 0.0;
    double not_valid_rate = 0.0;
    double ema = 1.0;
    double valid_fill = 0.0;  // selected / B
    double reward_mean = 0.0;
    std::vector<std::size_t> tier_pops;
    // event-only fields
    std::size_t rollouts = 0;
    std::size_t valid_groups = 0;
    std::size_t selected = 0;
    double frac_groups_acc_gt_90 = 0.0;
    double frac_skill_gt_90 = 0.0;
    double truncation_rate = 0.0;
    std::vector<double> tier_weights;
};

struct MetricsLog {
    std::vector<MetricsRecord> records;
    int tier_count = 5;

    /// iteration,mean_skill,not_valid_rate,ema,valid_fill,reward_mean,tier_pop_0..tier_pop_{T-1}
    std::string to_csv() const;
    std::string to_jsonl() const;
};

struct Dataset {
    std::vector<TaskSample> samples;
    std::vector<double> skill;  // initial latent pass probabilities, parallel to samples
};

/// Deterministic synthetic dataset: latent skills, simulated offline pass@k
/// grading merged with noisy human tiers, and small concrete payloads per domain.
Dataset synthesize_dataset(const ExperimentConfig& cfg);

/// JSON Lines: {"id","domain","prompt","reference","offline_tier"?,"human_tier"?,"skill"?}.
/// Without "skill", the latent skill starts at the offline tier midpoint.
Dataset parse_dataset(std::string_view jsonl, const CurriculumState& curriculum);
Dataset load_dataset(const std::string& path, const CurriculumState& curriculum);

struct ExperimentResult {
    MetricsLog log;
    std::vector<TaskSample> samples;
    SyntheticLearner learner;
    ExpansionState expansion;
    CurriculumState curriculum;

    std::string final_state_json() const;
};

/// Run the closed loop: draw, roll out, verify, select, grade, train, record.
ExperimentResult run_experiment(const ExperimentConfig& cfg, Dataset dataset, int iterations,
                                const JudgeClient& judge);

}  // namespace rlcs
