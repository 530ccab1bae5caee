#include "webdream/rollout.hpp"

#include <cmath>

namespace webdream {

namespace {

std::vector<Action> recent_actions(const Trajectory& t) {
    std::vector<Action> out;
    const size_t n = t.steps.size();
    for (size_t i = n >= 2 ? n - 2 : 0; i < n; ++i) out.push_back(t.steps[i].action);
    return out;
}

TrajectoryStep sample_step(const PolicyParams& theta, const Task& task, const AccessibilityTree& obs,
                           const Trajectory& so_far, const SamplingOptions& sampling, Rng& rng) {
    const auto history = recent_actions(so_far);
    const StepContext ctx(task, obs, history);
    SampledAction s = sample_action(theta, ctx, sampling, rng);
    return {obs, std::move(s.action), std::move(s.tokens), std::move(s.logprobs), std::nullopt};
}

void recompute_old_logprobs(Trajectory& t, const PolicyParams& theta_old) {
    const SequenceLogprob lp = logprob_sequence(theta_old, t);
    size_t k = 0;
    for (auto& step : t.steps) {
        step.logprobs_old.assign(lp.per_token.begin() + static_cast<std::ptrdiff_t>(k),
                                 lp.per_token.begin() + static_cast<std::ptrdiff_t>(k + step.tokens.size()));
        k += step.tokens.size();
    }
}

}  // namespace

ExpertStore ExpertStore::from_tasks(const WebEnv& env, const std::vector<GeneratedTask>& tasks) {
    ExpertStore store;
    for (const auto& gt : tasks) {
        auto task = std::make_shared<const Task>(gt.task);
        Trajectory t;
        t.task = task;
        t.provenance = Provenance::Expert;
        t.return_value = 1;
        std::vector<EnvState> states;
        auto [state, obs] = env.reset(*task);
        for (const Action& a : gt.witness) {
            TrajectoryStep step{obs, a, tokenize(a, obs, task->vocab), {}, std::nullopt};
            t.steps.push_back(std::move(step));
            states.push_back(state);
            StepResult r = env.step(state, a);
            state = std::move(r.state);
            obs = std::move(r.obs);
        }
        store.add(std::move(t), std::move(states));
    }
    return store;
}

void ExpertStore::add(Trajectory trajectory, std::vector<EnvState> states) {
    if (trajectory.steps.empty()) throw InvalidArgument("expert trajectory has no steps");
    if (states.size() != trajectory.steps.size()) throw InvalidArgument("expert states do not match steps");
    entries_.push_back({std::move(trajectory), std::move(states)});
}

std::vector<size_t> ExpertStore::entries_for(const std::string& task_id) const {
    std::vector<size_t> out;
    for (size_t i = 0; i < entries_.size(); ++i) {
        if (entries_[i].trajectory.task->task_id == task_id) out.push_back(i);
    }
    return out;
}

size_t ExpertStore::total_steps() const {
    size_t n = 0;
    for (const auto& e : entries_) n += e.trajectory.steps.size();
    return n;
}

InitialState sample_initial_state(const ExpertStore& store, Rng& rng, const std::string* task_id) {
    if (store.empty()) throw EmptyStore();
    std::vector<size_t> pool;
    if (task_id) {
        pool = store.entries_for(*task_id);
        if (pool.empty()) throw NoExpertForTask(*task_id);
    } else {
        pool.resize(store.entries().size());
        for (size_t i = 0; i < pool.size(); ++i) pool[i] = i;
    }
    size_t total = 0;
    for (size_t e : pool) total += store.entries()[e].trajectory.steps.size();
    size_t pick = rng.below(total);
    for (size_t e : pool) {
        const Trajectory& t = store.entries()[e].trajectory;
        if (pick < t.steps.size()) return {t.task, t.steps[pick].obs, e, pick};
        pick -= t.steps.size();
    }
    throw std::logic_error("sample_initial_state: unreachable");
}

Trajectory expert_suffix(const ExpertStore& store, size_t entry, size_t from, const PolicyParams& theta_old) {
    const Trajectory& src = store.entries().at(entry).trajectory;
    if (from >= src.steps.size()) throw InvalidArgument("expert_suffix: step out of range");
    Trajectory t;
    t.task = src.task;
    t.provenance = Provenance::Expert;
    t.return_value = 1;
    t.steps.assign(src.steps.begin() + static_cast<std::ptrdiff_t>(from), src.steps.end());
    recompute_old_logprobs(t, theta_old);
    return t;
}

Trajectory sample_expert(const ExpertStore& store, const std::string& task_id, const PolicyParams& theta_old,
                         Rng& rng) {
    const auto pool = store.entries_for(task_id);
    if (pool.empty()) throw NoExpertForTask(task_id);
    return expert_suffix(store, pool[rng.below(pool.size())], 0, theta_old);
}

Trajectory rollout_real(const WebEnv& env, std::shared_ptr<const Task> task, const PolicyParams& theta,
                        size_t max_steps, const SamplingOptions& sampling, Rng& rng, const Judge& judge,
                        const EnvState* start) {
    if (max_steps == 0) throw InvalidArgument("max_steps must be >= 1");
    Trajectory t;
    t.task = task;
    t.provenance = Provenance::Real;
    EnvState state;
    AccessibilityTree obs;
    if (start) {
        state = *start;
        obs = observe(state);
    } else {
        std::tie(state, obs) = env.reset(*task);
    }
    for (size_t i = 0; i < max_steps; ++i) {
        t.steps.push_back(sample_step(theta, *task, obs, t, sampling, rng));
        StepResult r = env.step(state, t.steps.back().action);
        if (r.state.done) break;
        state = std::move(r.state);
        obs = std::move(r.obs);
    }
    t.truncated = !t.ended_with_stop();
    t.return_value = judge.assess(*task, t);
    return t;
}

Trajectory rollout_imagined(const WorldModel& wm, std::shared_ptr<const Task> task, const AccessibilityTree& initial,
                            const PolicyParams& theta, size_t max_dream, const SamplingOptions& sampling, Rng& rng,
                            const Judge& judge) {
    if (max_dream == 0) throw InvalidArgument("max_dream must be >= 1");
    Trajectory t;
    t.task = task;
    t.provenance = Provenance::Imagined;
    AccessibilityTree obs = initial;
    for (size_t i = 0; i < max_dream; ++i) {
        t.steps.push_back(sample_step(theta, *task, obs, t, sampling, rng));
        const Action& a = t.steps.back().action;
        if (a.type == ActionType::Stop) break;
        ImaginedStep next = imagine_step(wm, obs, a, &rng);
        if (next.recovered) ++t.wm_recoveries;
        if (next.terminal) break;
        obs = std::move(next.obs);
    }
    t.truncated = !t.ended_with_stop() && t.steps.size() == max_dream;
    t.return_value = judge.assess(*task, t);
    return t;
}

std::string_view rollout_mode_name(RolloutMode m) {
    switch (m) {
        case RolloutMode::Imagined: return "imagined";
        case RolloutMode::Real: return "real";
        case RolloutMode::Mixed: return "mixed";
    }
    return "?";
}

RolloutMode rollout_mode_from_name(std::string_view name) {
    if (name == "imagined") return RolloutMode::Imagined;
    if (name == "real") return RolloutMode::Real;
    if (name == "mixed") return RolloutMode::Mixed;
    throw InvalidArgument("unknown rollout mode '" + std::string(name) + "'");
}

RolloutGroup build_group(const ExpertStore& store, const InitialState& start, const GroupOptions& options, Rng& rng,
                         const WorldModel* wm, const WebEnv& env, const PolicyParams& theta_old,
                         uint64_t theta_old_version, const Judge& judge) {
    if (options.group_size < 2) throw InvalidArgument("group_size must be >= 2");
    if (!(options.rho_expert >= 0.0 && options.rho_expert <= 1.0)) throw InvalidArgument("rho_expert must be in [0,1]");
    if (options.mode != RolloutMode::Real && !wm) throw InvalidArgument("imagined rollouts need a world model");

    const size_t G = options.group_size;
    std::vector<bool> expert(G, false);
    if (options.exact_count) {
        const auto n = static_cast<size_t>(std::llround(options.rho_expert * static_cast<double>(G)));
        for (size_t i = 0; i < n; ++i) expert[i] = true;
        rng.shuffle(expert);
    } else {
        for (size_t i = 0; i < G; ++i) expert[i] = rng.bernoulli(options.rho_expert);
    }

    const bool has_expert = start.entry != kNoExpertEntry && start.entry < store.entries().size();
    const EnvState* real_start = has_expert ? &store.entries()[start.entry].states[start.step] : nullptr;

    RolloutGroup g;
    g.task = start.task;
    g.theta_old_version = theta_old_version;
    for (size_t i = 0; i < G; ++i) {
        Trajectory t;
        if (expert[i] && has_expert) {
            t = expert_suffix(store, start.entry, start.step, theta_old);
        } else {
            if (expert[i]) ++g.expert_fallbacks;
            bool real = options.mode == RolloutMode::Real;
            if (options.mode == RolloutMode::Mixed) real = rng.bernoulli(0.5);
            t = real ? rollout_real(env, start.task, theta_old, options.max_steps, options.sampling, rng, judge,
                                    real_start)
                     : rollout_imagined(*wm, start.task, start.obs, theta_old, options.max_dream, options.sampling,
                                        rng, judge);
        }
        t.theta_old_version = theta_old_version;
        g.members.push_back(std::move(t));
    }
    return g;
}

}  // namespace webdream
