#include "webdream/gspo.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <numeric>

namespace webdream {

GroupAdvantages group_advantages(const std::vector<double>& returns) {
    if (returns.size() < 2) throw GroupTooSmall();
    GroupAdvantages a;
    const auto n = static_cast<double>(returns.size());
    a.mean = std::accumulate(returns.begin(), returns.end(), 0.0) / n;
    double var = 0.0;
    for (double r : returns) var += (r - a.mean) * (r - a.mean);
    a.std = std::sqrt(var / n);
    a.values.assign(returns.size(), 0.0);
    const bool all_equal = std::all_of(returns.begin(), returns.end(), [&](double r) { return r == returns.front(); });
    if (all_equal) return a;
    const double denom = std::max(a.std, kAdvantageStdFloor);
    for (size_t i = 0; i < returns.size(); ++i) a.values[i] = (returns[i] - a.mean) / denom;
    return a;
}

SequenceRatio sequence_ratio(const PolicyParams& theta, const Trajectory& trajectory) {
    SequenceRatio r;
    r.tokens = trajectory.token_count();
    if (r.tokens == 0) throw InvalidArgument("sequence_ratio: trajectory has no tokens");
    r.new_logprob = logprob_sequence(theta, trajectory).total;
    r.old_logprob = trajectory.old_logprob_total();
    r.log_s = (r.new_logprob - r.old_logprob) / static_cast<double>(r.tokens);
    r.s = std::exp(r.log_s);
    return r;
}

GspoResult gspo_objective(const PolicyParams& theta, const RolloutGroup& group, double clip_epsilon) {
    if (group.members.size() < 2) throw GroupTooSmall();
    for (const auto& m : group.members) {
        if (m.theta_old_version != group.members.front().theta_old_version) throw MixedCheckpoint();
    }
    GspoResult out;
    std::vector<double> returns;
    for (const auto& m : group.members) returns.push_back(m.return_value);
    out.advantages = group_advantages(returns);
    out.gradient.assign(theta.dim(), 0.0);

    const auto G = static_cast<double>(group.members.size());
    size_t clipped = 0;
    for (size_t i = 0; i < group.members.size(); ++i) {
        const Trajectory& m = group.members[i];
        const double A = out.advantages.values[i];
        const SequenceRatio r = sequence_ratio(theta, m);
        const double unclipped = r.s * A;
        const double bounded = std::clamp(r.s, 1.0 - clip_epsilon, 1.0 + clip_epsilon) * A;
        if (unclipped <= bounded) {
            out.objective += unclipped / G;
            const double scale = A * r.s / (G * static_cast<double>(r.tokens));
            if (scale != 0.0) accumulate_grad_logprob(theta, m, scale, out.gradient);
        } else {
            out.objective += bounded / G;
            ++clipped;
        }
    }
    out.clip_fraction = static_cast<double>(clipped) / G;
    return out;
}

OptimizerState make_optimizer(PolicyParams theta, double learning_rate, double clip_epsilon, double momentum,
                              size_t refresh_every) {
    if (!(learning_rate > 0.0) || !std::isfinite(learning_rate)) throw InvalidArgument("learning_rate must be > 0");
    if (!(clip_epsilon > 0.0) || !std::isfinite(clip_epsilon)) throw InvalidArgument("clip_epsilon must be > 0");
    if (!(momentum >= 0.0 && momentum < 1.0)) throw InvalidArgument("momentum must be in [0,1)");
    if (refresh_every == 0) throw InvalidArgument("refresh_every must be >= 1");
    OptimizerState s;
    s.theta_old = theta;
    s.theta = std::move(theta);
    s.learning_rate = learning_rate;
    s.clip_epsilon = clip_epsilon;
    s.momentum = momentum;
    s.refresh_every = refresh_every;
    if (momentum > 0.0) s.velocity.assign(s.theta.dim(), 0.0);
    return s;
}

OptimizerState apply_update(const OptimizerState& state, const std::vector<double>& gradient) {
    if (gradient.size() != state.theta.dim()) throw InvalidArgument("gradient dimension mismatch");
    if (!std::all_of(gradient.begin(), gradient.end(), [](double g) { return std::isfinite(g); })) {
        throw NonFiniteGradient();
    }
    OptimizerState next = state;
    if (next.momentum > 0.0) {
        for (size_t i = 0; i < gradient.size(); ++i) {
            next.velocity[i] = next.momentum * next.velocity[i] + gradient[i];
            next.theta.theta[i] += next.learning_rate * next.velocity[i];
        }
    } else {
        for (size_t i = 0; i < gradient.size(); ++i) next.theta.theta[i] += next.learning_rate * gradient[i];
    }
    ++next.step_count;
    if (next.step_count % next.refresh_every == 0) {
        next.theta_old = next.theta;
        ++next.theta_old_version;
    }
    return next;
}

nlohmann::json to_json(const OptimizerState& s) {
    nlohmann::json j{{"policy", params_to_json(s.theta)},
                     {"step_count", s.step_count},
                     {"theta_old_version", s.theta_old_version},
                     {"learning_rate", s.learning_rate},
                     {"clip_epsilon", s.clip_epsilon},
                     {"momentum", s.momentum},
                     {"refresh_every", s.refresh_every}};
    if (s.theta_old != s.theta) j["theta_old"] = s.theta_old.theta;
    if (!s.velocity.empty()) j["velocity"] = s.velocity;
    return j;
}

OptimizerState optimizer_from_json(const nlohmann::json& j) {
    OptimizerState s = make_optimizer(params_from_json(j.at("policy")), j.at("learning_rate").get<double>(),
                                      j.at("clip_epsilon").get<double>(), j.value("momentum", 0.0),
                                      j.value("refresh_every", size_t{1}));
    s.step_count = j.at("step_count").get<uint64_t>();
    s.theta_old_version = j.at("theta_old_version").get<uint64_t>();
    if (j.contains("theta_old")) s.theta_old.theta = j.at("theta_old").get<std::vector<double>>();
    if (j.contains("velocity")) s.velocity = j.at("velocity").get<std::vector<double>>();
    if (s.theta_old.dim() != s.theta.dim() || (!s.velocity.empty() && s.velocity.size() != s.theta.dim())) {
        throw InvalidArgument("optimizer checkpoint dimension mismatch");
    }
    return s;
}

std::string metrics_csv_line(const MetricsRow& r) {
    char buf[256];
    std::snprintf(buf, sizeof buf, "%llu,%.17g,%.17g,%.17g,%.17g,%zu,%lld", static_cast<unsigned long long>(r.update),
                  r.objective, r.mean_return, r.clip_fraction, r.expert_fraction, r.wm_recoveries,
                  static_cast<long long>(r.wallclock_ms));
    return buf;
}

TrainResult train(const TrainOptions& options, const std::vector<std::shared_ptr<const Task>>& tasks,
                  const WorldModel* wm, const WebEnv& env, const ExpertStore& store, uint64_t seed,
                  const Judge& judge, const OptimizerState* resume, const UpdateCallback& on_update) {
    if (tasks.empty()) throw InvalidArgument("train: no tasks");
    TrainResult result;
    result.state = resume ? *resume
                          : make_optimizer(PolicyParams(options.feature_dim), options.learning_rate,
                                           options.clip_epsilon, options.momentum, options.refresh_every);
    const uint64_t total = options.epochs * tasks.size();
    const auto t0 = std::chrono::steady_clock::now();

    std::vector<size_t> order;
    uint64_t order_epoch = UINT64_MAX;
    for (uint64_t u = result.state.step_count; u < total; ++u) {
        const uint64_t epoch = u / tasks.size();
        if (epoch != order_epoch) {
            order.resize(tasks.size());
            std::iota(order.begin(), order.end(), 0);
            Rng order_rng = Rng::substream(seed, "epoch-order", epoch);
            order_rng.shuffle(order);
            order_epoch = epoch;
        }
        const auto& task = tasks[order[u % tasks.size()]];
        Rng rng = Rng::substream(seed, "rollouts", u);

        InitialState start;
        if (!store.entries_for(task->task_id).empty()) {
            start = sample_initial_state(store, rng, &task->task_id);
        } else {
            start.task = task;
            start.obs = env.reset(*task).second;
        }
        const RolloutGroup group = build_group(store, start, options.group, rng, wm, env, result.state.theta_old,
                                               result.state.theta_old_version, judge);
        const GspoResult g = gspo_objective(result.state.theta, group, result.state.clip_epsilon);
        result.state = apply_update(result.state, g.gradient);

        MetricsRow row;
        row.update = u;
        row.objective = g.objective;
        row.clip_fraction = g.clip_fraction;
        for (const auto& m : group.members) {
            row.mean_return += m.return_value;
            row.expert_fraction += m.provenance == Provenance::Expert ? 1.0 : 0.0;
            row.wm_recoveries += m.wm_recoveries;
        }
        row.mean_return /= static_cast<double>(group.members.size());
        row.expert_fraction /= static_cast<double>(group.members.size());
        if (options.log_wallclock) {
            row.wallclock_ms = std::chrono::duration_cast<std::chrono::milliseconds>(std::chrono::steady_clock::now() - t0)
                                   .count();
        }
        result.metrics.push_back(row);
        if (on_update) on_update(row, result.state);
    }
    return result;
}

}  // namespace webdream
