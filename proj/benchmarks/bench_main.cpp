#include <benchmark/benchmark.h>

#include "webdream/corpus.hpp"
#include "webdream/edit_script.hpp"
#include "webdream/gspo.hpp"
#include "webdream/rollout.hpp"
#include "webdream/task.hpp"
#include "webdream/world_model.hpp"

using namespace webdream;

namespace {

struct Fixture {
    std::vector<GeneratedTask> tasks = generate_tasks(7, 10, {SiteKind::Shop});
    WebEnv env;
    std::shared_ptr<const Task> task = std::make_shared<const Task>(tasks.front().task);
    AccessibilityTree home = env.reset(*task).second;
    AccessibilityTree results =
        env.step(env.reset(*task).first, tasks.front().witness.front()).obs;
    TransitionCorpus corpus = collect_corpus(env, tasks, 2000, 7);
    WorldModel wm = train_wm(corpus, kDefaultWmAlpha, 0.1);
    ExpertStore store = ExpertStore::from_tasks(env, tasks);
};

const Fixture& fixture() {
    static const Fixture f;
    return f;
}

void BM_DiffTrees(benchmark::State& state) {
    const auto& f = fixture();
    for (auto _ : state) benchmark::DoNotOptimize(diff_trees(f.home, f.results));
}
BENCHMARK(BM_DiffTrees);

void BM_ApplyScript(benchmark::State& state) {
    const auto& f = fixture();
    const EditScript script = diff_trees(f.home, f.results);
    for (auto _ : state) benchmark::DoNotOptimize(apply_script(f.home, script));
}
BENCHMARK(BM_ApplyScript);

void BM_SampleAction(benchmark::State& state) {
    const auto& f = fixture();
    const PolicyParams theta;
    const StepContext ctx(*f.task, f.home, {});
    SamplingOptions opts;
    Rng rng(1);
    for (auto _ : state) benchmark::DoNotOptimize(sample_action(theta, ctx, opts, rng));
}
BENCHMARK(BM_SampleAction);

void BM_WorldModelPredict(benchmark::State& state) {
    const auto& f = fixture();
    Rng rng(2);
    size_t i = 0;
    for (auto _ : state) {
        const Transition& t = f.corpus.transitions[i++ % f.corpus.transitions.size()];
        benchmark::DoNotOptimize(imagine_step(f.wm, t.obs, t.action, &rng));
    }
}
BENCHMARK(BM_WorldModelPredict);

void BM_ImaginedRollout(benchmark::State& state) {
    const auto& f = fixture();
    const PolicyParams theta;
    const RuleJudge judge;
    SamplingOptions opts;
    Rng rng(3);
    for (auto _ : state) {
        benchmark::DoNotOptimize(
            rollout_imagined(f.wm, f.task, f.home, theta, static_cast<size_t>(state.range(0)), opts, rng, judge));
    }
}
BENCHMARK(BM_ImaginedRollout)->Arg(1)->Arg(5)->Arg(10);

void BM_GspoObjective(benchmark::State& state) {
    const auto& f = fixture();
    const PolicyParams theta;
    const RuleJudge judge;
    GroupOptions options;
    options.group_size = static_cast<size_t>(state.range(0));
    Rng rng(4);
    const InitialState start = sample_initial_state(f.store, rng);
    const RolloutGroup group = build_group(f.store, start, options, rng, &f.wm, f.env, theta, 0, judge);
    for (auto _ : state) benchmark::DoNotOptimize(gspo_objective(theta, group, 0.2));
}
BENCHMARK(BM_GspoObjective)->Arg(8)->Arg(32);

}  // namespace

BENCHMARK_MAIN();
