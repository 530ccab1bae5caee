#pragma once

#include <cstdint>
#include <memory>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "webdream/env.hpp"
#include "webdream/judge.hpp"
#include "webdream/policy.hpp"
#include "webdream/task.hpp"
#include "webdream/trajectory.hpp"
#include "webdream/world_model.hpp"

namespace webdream {

class EmptyStore : public std::invalid_argument {
public:
    EmptyStore() : std::invalid_argument("expert store is empty") {}
};

class NoExpertForTask : public std::invalid_argument {
public:
    explicit NoExpertForTask(const std::string& task_id)
        : std::invalid_argument("no expert trajectory for task '" + task_id + "'") {}
};

/// Witness trajectories with the real environment state before each step.
class ExpertStore {
public:
    struct Entry {
        Trajectory trajectory;
        std::vector<EnvState> states;
    };

    /// Replays each witness in the environment and tokenizes it.
    static ExpertStore from_tasks(const WebEnv& env, const std::vector<GeneratedTask>& tasks);

    void add(Trajectory trajectory, std::vector<EnvState> states);
    const std::vector<Entry>& entries() const { return entries_; }
    std::vector<size_t> entries_for(const std::string& task_id) const;
    size_t total_steps() const;
    bool empty() const { return entries_.empty(); }

private:
    std::vector<Entry> entries_;
};

inline constexpr size_t kNoExpertEntry = SIZE_MAX;

/// A group prompt: a task and an observation to start from. `entry` and
/// `step` locate it in the store, or entry is kNoExpertEntry for a reset state.
struct InitialState {
    std::shared_ptr<const Task> task;
    AccessibilityTree obs;
    size_t entry = kNoExpertEntry;
    size_t step = 0;
};

/// Uniform over (trajectory, step) pairs, optionally restricted to one task.
/// Throws EmptyStore, NoExpertForTask.
InitialState sample_initial_state(const ExpertStore& store, Rng& rng, const std::string* task_id = nullptr);

/// A stored witness for the task (uniform among its witnesses) with
/// logprobs_old recomputed under theta_old. Throws NoExpertForTask.
Trajectory sample_expert(const ExpertStore& store, const std::string& task_id, const PolicyParams& theta_old,
                         Rng& rng);

/// Steps [from, end) of a witness as an expert trajectory under theta_old.
Trajectory expert_suffix(const ExpertStore& store, size_t entry, size_t from, const PolicyParams& theta_old);

/// Rolls out in the real environment from start (reset state when null).
Trajectory rollout_real(const WebEnv& env, std::shared_ptr<const Task> task, const PolicyParams& theta,
                        size_t max_steps, const SamplingOptions& sampling, Rng& rng, const Judge& judge,
                        const EnvState* start = nullptr);

/// Rolls out against the world model from a real observation. The
/// environment is never touched.
Trajectory rollout_imagined(const WorldModel& wm, std::shared_ptr<const Task> task, const AccessibilityTree& initial,
                            const PolicyParams& theta, size_t max_dream, const SamplingOptions& sampling, Rng& rng,
                            const Judge& judge);

enum class RolloutMode { Imagined, Real, Mixed };
std::string_view rollout_mode_name(RolloutMode m);
RolloutMode rollout_mode_from_name(std::string_view name);

struct GroupOptions {
    size_t group_size = 8;
    double rho_expert = 0.5;
    /// round(rho_expert * G) expert slots at shuffled positions instead of independent draws.
    bool exact_count = false;
    RolloutMode mode = RolloutMode::Imagined;
    size_t max_steps = 10;
    size_t max_dream = 5;
    SamplingOptions sampling;
};

struct RolloutGroup {
    std::shared_ptr<const Task> task;
    std::vector<Trajectory> members;
    uint64_t theta_old_version = 0;
    /// Expert slots that fell back to a rollout because the task has no witness.
    size_t expert_fallbacks = 0;
};

/// All members share the prompt `start`: imagined and real rollouts begin
/// from its state and expert members replay the witness from its step.
RolloutGroup build_group(const ExpertStore& store, const InitialState& start, const GroupOptions& options, Rng& rng,
                         const WorldModel* wm, const WebEnv& env, const PolicyParams& theta_old,
                         uint64_t theta_old_version, const Judge& judge);

}  // namespace webdream
