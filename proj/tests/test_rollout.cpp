#include <cmath>
#include <map>

#include <gtest/gtest.h>

#include "support.hpp"
#include "webdream/rollout.hpp"

using namespace webdream;

namespace {

SamplingOptions sampling() {
    SamplingOptions s;
    s.temperature = 1.0;
    s.top_p = 1.0;
    return s;
}

// A policy that puts overwhelming weight on Stop at the reset observation.
PolicyParams stop_first(const Task& task, const AccessibilityTree& obs) {
    PolicyParams theta;
    const StepContext ctx(task, obs, {});
    SparseFeatures fs;
    ctx.features({}, ActionToken::act(ActionType::Stop), theta.dim(), fs);
    for (uint32_t f : fs) theta.theta[f] += 50.0;
    return theta;
}

// Every coarse context seen on the fixture pages maps to MarkTerminal, with
// negligible smoothing mass left for anything else.
WorldModel always_terminal_wm() {
    const auto& f = testkit::shop_fixture();
    TransitionCorpus c;
    for (const auto& e : f.store.entries()) {
        for (const auto& st : e.trajectory.steps) {
            for (const Action& a : testkit::all_actions(st.obs, e.trajectory.task->vocab)) {
                Transition t;
                t.obs = st.obs;
                t.action = a;
                t.next_obs = st.obs;
                t.delta = EditScript{{ops::MarkTerminal{}}};
                t.terminal = true;
                c.transitions.push_back(std::move(t));
            }
        }
    }
    return train_wm(c, 1e-12, 1.0);
}

}  // namespace

TEST(RolloutReal, ImmediateStop) {
    const auto& f = testkit::shop_fixture();
    RuleJudge judge;
    Rng rng(61);
    for (const auto& gt : f.tasks) {
        auto task = std::make_shared<const Task>(gt.task);
        const PolicyParams theta = stop_first(*task, f.env.reset(*task).second);
        const Trajectory t = rollout_real(f.env, task, theta, 10, sampling(), rng, judge);
        ASSERT_EQ(t.steps.size(), 1u);
        EXPECT_EQ(t.steps[0].action.type, ActionType::Stop);
        EXPECT_FALSE(t.truncated);
        EXPECT_EQ(t.provenance, Provenance::Real);
    }
}

TEST(RolloutReal, ReplayReproducesObservations) {
    const auto& f = testkit::shop_fixture();
    RuleJudge judge;
    Rng rng(62);
    const PolicyParams theta = testkit::random_params(rng, 0.5);
    for (int i = 0; i < 40; ++i) {
        const auto& gt = f.tasks[static_cast<size_t>(i) % f.tasks.size()];
        auto task = std::make_shared<const Task>(gt.task);
        const Trajectory t = rollout_real(f.env, task, theta, 10, sampling(), rng, judge);
        ASSERT_LE(t.steps.size(), 10u);
        EXPECT_EQ(t.truncated, !t.ended_with_stop());
        auto [s, o] = f.env.reset(*task);
        for (const auto& st : t.steps) {
            ASSERT_EQ(o, st.obs);
            ASSERT_EQ(detokenize(st.tokens, st.obs, task->vocab), st.action);
            const StepResult r = step(s, st.action);
            s = r.state;
            o = r.obs;
        }
        EXPECT_EQ(t.return_value, evaluate(task->goal, t));
    }
}

TEST(RolloutReal, CountsLiveSteps) {
    const auto& f = testkit::shop_fixture();
    WebEnv env;
    RuleJudge judge;
    Rng rng(63);
    auto task = std::make_shared<const Task>(f.tasks.front().task);
    const Trajectory t = rollout_real(env, task, PolicyParams(), 10, sampling(), rng, judge);
    EXPECT_EQ(env.live_steps(), t.steps.size());
    EXPECT_THROW(rollout_real(env, task, PolicyParams(), 0, sampling(), rng, judge), InvalidArgument);
}

TEST(RolloutImagined, AlwaysTerminalWorldModel) {
    const auto& f = testkit::shop_fixture();
    const WorldModel wm = always_terminal_wm();
    RuleJudge judge;
    Rng rng(64);
    for (int i = 0; i < 200; ++i) {
        const InitialState s = sample_initial_state(f.store, rng);
        const Trajectory t = rollout_imagined(wm, s.task, s.obs, PolicyParams(), 5, sampling(), rng, judge);
        ASSERT_EQ(t.steps.size(), 1u);
    }
}

TEST(RolloutImagined, LengthNeverExceedsCapAndEnvUntouched) {
    const auto& f = testkit::shop_fixture();
    WebEnv env;
    RuleJudge judge;
    Rng rng(65);
    const PolicyParams theta = testkit::random_params(rng, 0.3);
    std::map<size_t, size_t> hist;
    for (int i = 0; i < 1000; ++i) {
        const InitialState s = sample_initial_state(f.store, rng);
        const size_t cap = 1 + static_cast<size_t>(i % 5);
        const Trajectory t = rollout_imagined(f.wm, s.task, s.obs, theta, cap, sampling(), rng, judge);
        ASSERT_LE(t.steps.size(), cap);
        ASSERT_GE(t.steps.size(), 1u);
        ASSERT_EQ(t.steps.front().obs, s.obs);
        ASSERT_EQ(t.provenance, Provenance::Imagined);
        ++hist[t.steps.size()];
    }
    EXPECT_EQ(env.live_steps(), 0u);
    EXPECT_GT(hist.size(), 2u);
}

TEST(InitialState, UniformOverSteps) {
    const auto& f = testkit::shop_fixture();
    const auto& src = f.store.entries().front();
    ASSERT_GE(src.trajectory.steps.size(), 2u);
    ExpertStore store;
    Trajectory t = src.trajectory;
    std::vector<EnvState> states = src.states;
    while (t.steps.size() < 4) {
        t.steps.insert(t.steps.begin(), t.steps.front());
        states.insert(states.begin(), states.front());
    }
    t.steps.resize(4);
    states.resize(4);
    store.add(t, states);
    Rng rng(66);
    std::vector<double> freq(4, 0.0);
    const int draws = 10000;
    for (int i = 0; i < draws; ++i) {
        const InitialState s = sample_initial_state(store, rng);
        ASSERT_EQ(s.entry, 0u);
        ASSERT_EQ(s.obs, t.steps[s.step].obs);
        freq[s.step] += 1.0 / draws;
    }
    for (double p : freq) EXPECT_NEAR(p, 0.25, 0.02);
}

TEST(InitialState, BelongsToTaskSite) {
    const auto& f = testkit::shop_fixture();
    Rng rng(67);
    for (int i = 0; i < 200; ++i) {
        const InitialState s = sample_initial_state(f.store, rng);
        const auto site = f.env.site_for(*s.task);
        const EnvState& st = f.store.entries()[s.entry].states[s.step];
        ASSERT_EQ(st.site->seed, site->seed);
        ASSERT_EQ(st.site->kind, site->kind);
        ASSERT_EQ(s.obs.url.rfind("http://" + site->host, 0), 0u);
        ASSERT_EQ(observe(st), s.obs);
        ASSERT_EQ(parse_tree(serialize_tree(s.obs)), s.obs);
    }
}

TEST(InitialState, Errors) {
    Rng rng(68);
    EXPECT_THROW(sample_initial_state(ExpertStore(), rng), EmptyStore);
    const std::string missing = "no-such-task";
    EXPECT_THROW(sample_initial_state(testkit::shop_fixture().store, rng, &missing), NoExpertForTask);
    EXPECT_THROW(sample_expert(testkit::shop_fixture().store, missing, PolicyParams(), rng), NoExpertForTask);
}

TEST(Expert, LogprobsAndReturn) {
    const auto& f = testkit::shop_fixture();
    RuleJudge judge;
    Rng rng(69);
    const PolicyParams theta = testkit::random_params(rng, 0.5);
    for (size_t e = 0; e < f.store.entries().size(); ++e) {
        const auto& src = f.store.entries()[e].trajectory;
        for (size_t k = 0; k < src.steps.size(); ++k) {
            const Trajectory t = expert_suffix(f.store, e, k, theta);
            ASSERT_EQ(t.steps.size(), src.steps.size() - k);
            ASSERT_EQ(t.provenance, Provenance::Expert);
            ASSERT_EQ(t.return_value, 1);
            ASSERT_EQ(judge.assess(*t.task, t), 1);
            ASSERT_NEAR(t.old_logprob_total(), logprob_sequence(theta, t).total, 1e-12);
        }
    }
}

TEST(Expert, SamplesAmongWitnesses) {
    const auto& f = testkit::shop_fixture();
    const auto& src = f.store.entries().front();
    ExpertStore store;
    store.add(src.trajectory, src.states);
    Trajectory shorter = src.trajectory;
    std::vector<EnvState> states = src.states;
    shorter.steps.erase(shorter.steps.begin());
    states.erase(states.begin());
    store.add(shorter, states);
    Rng rng(70);
    std::map<size_t, int> counts;
    for (int i = 0; i < 2000; ++i) {
        ++counts[sample_expert(store, src.trajectory.task->task_id, PolicyParams(), rng).steps.size()];
    }
    ASSERT_EQ(counts.size(), 2u);
    for (const auto& [len, n] : counts) EXPECT_NEAR(n / 2000.0, 0.5, 0.05);
}

TEST(BuildGroup, NoExpertsAtZeroRho) {
    const auto& f = testkit::shop_fixture();
    RuleJudge judge;
    Rng rng(71);
    GroupOptions opts;
    opts.rho_expert = 0.0;
    opts.sampling = sampling();
    for (RolloutMode m : {RolloutMode::Imagined, RolloutMode::Real, RolloutMode::Mixed}) {
        opts.mode = m;
        std::map<Provenance, size_t> seen;
        for (int i = 0; i < 20; ++i) {
            const InitialState s = sample_initial_state(f.store, rng);
            const RolloutGroup g = build_group(f.store, s, opts, rng, &f.wm, f.env, PolicyParams(), 3, judge);
            ASSERT_EQ(g.members.size(), 8u);
            for (const auto& t : g.members) {
                ASSERT_NE(t.provenance, Provenance::Expert);
                ASSERT_EQ(t.theta_old_version, 3u);
                ASSERT_EQ(t.steps.front().obs, s.obs);
                ++seen[t.provenance];
            }
        }
        EXPECT_EQ(seen.size(), m == RolloutMode::Mixed ? 2u : 1u);
    }
}

TEST(BuildGroup, ExpertFractionIsBinomial) {
    const auto& f = testkit::shop_fixture();
    RuleJudge judge;
    Rng rng(72);
    GroupOptions opts;
    opts.rho_expert = 0.5;
    opts.max_dream = 1;
    opts.sampling = sampling();
    size_t experts = 0, slots = 0;
    while (slots < 10000) {
        const InitialState s = sample_initial_state(f.store, rng);
        const RolloutGroup g = build_group(f.store, s, opts, rng, &f.wm, f.env, PolicyParams(), 0, judge);
        for (const auto& t : g.members) {
            if (t.provenance == Provenance::Expert) {
                ++experts;
                ASSERT_EQ(t.return_value, 1);
            }
        }
        slots += g.members.size();
        EXPECT_EQ(g.expert_fallbacks, 0u);
    }
    EXPECT_NEAR(static_cast<double>(experts) / static_cast<double>(slots), 0.5, 0.01);
}

TEST(BuildGroup, ExactCount) {
    const auto& f = testkit::shop_fixture();
    RuleJudge judge;
    Rng rng(73);
    GroupOptions opts;
    opts.exact_count = true;
    opts.max_dream = 1;
    opts.sampling = sampling();
    for (double rho : {0.0, 0.25, 0.5, 1.0}) {
        opts.rho_expert = rho;
        for (int i = 0; i < 10; ++i) {
            const RolloutGroup g = build_group(f.store, sample_initial_state(f.store, rng), opts, rng, &f.wm, f.env,
                                               PolicyParams(), 0, judge);
            size_t n = 0;
            for (const auto& t : g.members) n += t.provenance == Provenance::Expert ? 1 : 0;
            ASSERT_EQ(n, static_cast<size_t>(std::llround(rho * 8)));
        }
    }
}

TEST(BuildGroup, ImaginedModeNeverTouchesEnvironment) {
    const auto& f = testkit::shop_fixture();
    WebEnv env;
    RuleJudge judge;
    Rng rng(74);
    GroupOptions opts;
    opts.sampling = sampling();
    for (int i = 0; i < 20; ++i) {
        build_group(f.store, sample_initial_state(f.store, rng), opts, rng, &f.wm, env, PolicyParams(), 0, judge);
    }
    EXPECT_EQ(env.live_steps(), 0u);
}

TEST(BuildGroup, FallbackWithoutWitnessAndErrors) {
    const auto& f = testkit::shop_fixture();
    RuleJudge judge;
    Rng rng(75);
    GroupOptions opts;
    opts.rho_expert = 1.0;
    opts.sampling = sampling();
    InitialState reset;
    reset.task = std::make_shared<const Task>(f.tasks.front().task);
    reset.obs = f.env.reset(*reset.task).second;
    const RolloutGroup g = build_group(f.store, reset, opts, rng, &f.wm, f.env, PolicyParams(), 0, judge);
    EXPECT_EQ(g.expert_fallbacks, 8u);
    for (const auto& t : g.members) EXPECT_EQ(t.provenance, Provenance::Imagined);

    opts.group_size = 1;
    EXPECT_THROW(build_group(f.store, reset, opts, rng, &f.wm, f.env, PolicyParams(), 0, judge), InvalidArgument);
    opts.group_size = 8;
    opts.rho_expert = 1.5;
    EXPECT_THROW(build_group(f.store, reset, opts, rng, &f.wm, f.env, PolicyParams(), 0, judge), InvalidArgument);
    opts.rho_expert = 0.5;
    EXPECT_THROW(build_group(f.store, reset, opts, rng, nullptr, f.env, PolicyParams(), 0, judge), InvalidArgument);
}

TEST(RolloutMode, Names) {
    for (RolloutMode m : {RolloutMode::Imagined, RolloutMode::Real, RolloutMode::Mixed}) {
        EXPECT_EQ(rollout_mode_from_name(rollout_mode_name(m)), m);
    }
    EXPECT_THROW(rollout_mode_from_name("dream"), InvalidArgument);
}
