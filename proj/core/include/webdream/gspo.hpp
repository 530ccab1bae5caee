#pragma once

#include <cstdint>
#include <functional>
#include <iosfwd>
#include <memory>
#include <stdexcept>
#include <vector>

#include <json.hpp>

#include "webdream/policy.hpp"
#include "webdream/rollout.hpp"

namespace webdream {

class GroupTooSmall : public std::invalid_argument {
public:
    GroupTooSmall() : std::invalid_argument("group needs at least 2 members") {}
};

class MixedCheckpoint : public std::invalid_argument {
public:
    MixedCheckpoint() : std::invalid_argument("group members come from different theta_old snapshots") {}
};

class NonFiniteGradient : public std::invalid_argument {
public:
    NonFiniteGradient() : std::invalid_argument("gradient has non-finite entries") {}
};

constexpr double kAdvantageStdFloor = 1e-6;

struct GroupAdvantages {
    std::vector<double> values;
    double mean = 0.0;
    /// Population standard deviation of the raw returns.
    double std = 0.0;
};

/// (G_i - mean) / max(std, floor); all zero when the returns are equal.
GroupAdvantages group_advantages(const std::vector<double>& returns);

struct SequenceRatio {
    double s = 1.0;
    double log_s = 0.0;
    double new_logprob = 0.0;
    double old_logprob = 0.0;
    size_t tokens = 0;
};

/// exp((L_new - L_old) / |y|) in log space.
SequenceRatio sequence_ratio(const PolicyParams& theta, const Trajectory& trajectory);

struct GspoResult {
    double objective = 0.0;
    std::vector<double> gradient;
    GroupAdvantages advantages;
    /// Members whose clipped branch is active.
    double clip_fraction = 0.0;
};

/// J = mean_i min(s_i A_i, clip(s_i, 1-eps, 1+eps) A_i) and its exact gradient.
/// Ties between the branches take the unclipped one.
GspoResult gspo_objective(const PolicyParams& theta, const RolloutGroup& group, double clip_epsilon);

struct OptimizerState {
    PolicyParams theta;
    PolicyParams theta_old;
    uint64_t step_count = 0;
    uint64_t theta_old_version = 0;
    double learning_rate = 0.01;
    double clip_epsilon = 0.2;
    double momentum = 0.0;
    std::vector<double> velocity;
    /// theta_old is refreshed every this many updates.
    size_t refresh_every = 1;
};

/// Validates hyperparameters; theta_old starts equal to theta.
OptimizerState make_optimizer(PolicyParams theta, double learning_rate, double clip_epsilon, double momentum = 0.0,
                              size_t refresh_every = 1);

/// Gradient ascent: theta += lr * g (through the momentum buffer when enabled).
/// Throws NonFiniteGradient.
OptimizerState apply_update(const OptimizerState& state, const std::vector<double>& gradient);

nlohmann::json to_json(const OptimizerState& state);
OptimizerState optimizer_from_json(const nlohmann::json& j);

struct TrainOptions {
    size_t epochs = 10;
    GroupOptions group;
    double learning_rate = 0.01;
    double clip_epsilon = 0.2;
    double momentum = 0.0;
    size_t refresh_every = 1;
    size_t feature_dim = kDefaultFeatureDim;
    bool log_wallclock = false;
};

struct MetricsRow {
    uint64_t update = 0;
    double objective = 0.0;
    double mean_return = 0.0;
    double clip_fraction = 0.0;
    double expert_fraction = 0.0;
    size_t wm_recoveries = 0;
    int64_t wallclock_ms = 0;
};

constexpr const char* kMetricsHeader = "update,J,mean_return,clip_fraction,expert_fraction,wm_recoveries,wallclock_ms";
std::string metrics_csv_line(const MetricsRow& row);

struct TrainResult {
    OptimizerState state;
    std::vector<MetricsRow> metrics;
};

using UpdateCallback = std::function<void(const MetricsRow&, const OptimizerState&)>;

/// One update per task per epoch, tasks in a seeded per-epoch order. Every
/// update draws from its own substream, so resuming from a saved state
/// reproduces the uninterrupted run.
TrainResult train(const TrainOptions& options, const std::vector<std::shared_ptr<const Task>>& tasks,
                  const WorldModel* wm, const WebEnv& env, const ExpertStore& store, uint64_t seed,
                  const Judge& judge, const OptimizerState* resume = nullptr, const UpdateCallback& on_update = {});

}  // namespace webdream
