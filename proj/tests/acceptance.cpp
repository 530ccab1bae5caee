// Prints one PASS/FAIL line per acceptance criterion. Pass criterion numbers
// as arguments to run a subset. Exit status is the number of failures.
#include <sys/wait.h>
#include <unistd.h>

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <functional>
#include <set>
#include <sstream>
#include <string>

#include "support.hpp"
#include "webdream/experiment.hpp"

using namespace webdream;
namespace fs = std::filesystem;

namespace {

struct Verdict {
    bool pass = false;
    std::string detail;
};

std::string fmt(const char* f, double a, double b = 0, double c = 0, double d = 0) {
    char buf[256];
    std::snprintf(buf, sizeof buf, f, a, b, c, d);
    return buf;
}

double seconds_since(std::chrono::steady_clock::time_point t0) {
    return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

RolloutGroup group_under(const Experiment& e, const PolicyParams& theta_old, Rng& rng) {
    const InitialState start = sample_initial_state(e.store, rng);
    GroupOptions o;
    o.sampling.temperature = 1.0;
    o.sampling.top_p = 1.0;
    o.rho_expert = 0.25;
    RuleJudge judge;
    WebEnv env;
    RolloutGroup g = build_group(e.store, start, o, rng, &e.wm, env, theta_old, 0, judge);
    // Mixed returns so advantages are nonzero.
    for (size_t i = 0; i < g.members.size(); ++i) g.members[i].return_value = static_cast<int>(i % 2);
    return g;
}

const Experiment& suite() {
    static const Experiment e = make_experiment(1);
    return e;
}

Verdict criterion1() {
    const auto t0 = std::chrono::steady_clock::now();
    Rng rng(1001);
    size_t bad = 0;
    for (int i = 0; i < 10000; ++i) {
        const AccessibilityTree a = testkit::random_tree(rng);
        const AccessibilityTree b = testkit::random_mutation(rng, a);
        if (apply_script(a, diff_trees(a, b)) != b) ++bad;
    }
    const double t = seconds_since(t0);
    return {bad == 0 && t < 30.0, fmt("%.0f/10000 mismatches, %.2fs", static_cast<double>(bad), t)};
}

Verdict criterion2() {
    Rng rng(1002);
    double worst_ratio = 0.0, worst_j = 0.0, worst_sum = 0.0;
    bool zero_ok = true;
    for (int g = 0; g < 10; ++g) {
        const PolicyParams theta = testkit::random_params(rng, 0.5);
        const RolloutGroup group = group_under(suite(), theta, rng);
        for (const auto& m : group.members) worst_ratio = std::max(worst_ratio, std::abs(sequence_ratio(theta, m).s - 1));
        worst_j = std::max(worst_j, std::abs(gspo_objective(theta, group, 0.2).objective));
    }
    for (int c = 0; c < 1000; ++c) {
        std::vector<double> r(2 + rng.below(15));
        for (auto& x : r) x = rng.bernoulli(0.5) ? 1.0 : 0.0;
        double sum = 0.0;
        for (double a : group_advantages(r).values) sum += a;
        worst_sum = std::max(worst_sum, std::abs(sum));
        std::vector<double> flat(r.size(), r[0]);
        for (double a : group_advantages(flat).values) zero_ok = zero_ok && a == 0.0;
    }
    return {worst_ratio <= 1e-12 && worst_j <= 1e-9 && worst_sum <= 1e-9 && zero_ok,
            fmt("max |s-1| %.2e, max |J| %.2e, max |sum A| %.2e", worst_ratio, worst_j, worst_sum) +
                (zero_ok ? ", zero-variance groups all zero" : ", zero-variance group nonzero")};
}

Verdict criterion3() {
    const auto t0 = std::chrono::steady_clock::now();
    Rng rng(1003);
    const double h = 1e-5;
    double worst = 0.0;
    size_t coords = 0;
    for (int g = 0; g < 10; ++g) {
        const PolicyParams old = testkit::random_params(rng, 0.5);
        const RolloutGroup group = group_under(suite(), old, rng);
        PolicyParams theta = old;
        for (auto& w : theta.theta) w += 0.05 * (2.0 * rng.uniform() - 1.0);
        const auto grad = gspo_objective(theta, group, 0.2).gradient;
        const Trajectory& traj = group.members[rng.below(group.members.size())];
        const auto glp = grad_logprob(theta, traj);
        for (int c = 0; c < 3; ++c) {
            for (int which = 0; which < 2; ++which) {
                const auto& analytic = which == 0 ? grad : glp;
                std::vector<size_t> touched;
                for (size_t i = 0; i < analytic.size(); ++i) {
                    if (analytic[i] != 0.0) touched.push_back(i);
                }
                if (touched.empty()) continue;
                const size_t i = touched[rng.below(touched.size())];
                auto eval = [&] {
                    return which == 0 ? gspo_objective(theta, group, 0.2).objective
                                      : logprob_sequence(theta, traj).total;
                };
                const double keep = theta.theta[i];
                theta.theta[i] = keep + h;
                const double up = eval();
                theta.theta[i] = keep - h;
                const double down = eval();
                theta.theta[i] = keep;
                worst = std::max(worst, testkit::rel_error(analytic[i], (up - down) / (2 * h), 1e-8));
                ++coords;
            }
        }
    }
    const double t = seconds_since(t0);
    return {worst < 1e-4 && coords >= 40 && t < 60.0,
            fmt("%.0f coordinates over 10 groups, max rel error %.2e, %.2fs", static_cast<double>(coords), worst, t)};
}

Verdict criterion4() {
    TaskGenOptions gen;
    gen.n_pages = 10;
    const auto tasks = generate_tasks(7, 10, {SiteKind::Shop}, gen);
    WebEnv env;
    const auto corpus = clean_corpus(collect_corpus(env, tasks, 2000, 7)).corpus;
    const auto [train, heldout] = split_corpus(corpus, 0.2, 7);
    const double trained = eval_wm(train_wm(train, kDefaultWmAlpha, 0.1), heldout).exact_match_rate;
    const double prior = eval_wm(frozen_prior_wm(0.1), heldout).exact_match_rate;
    return {trained >= 0.9 && trained - prior >= 0.3,
            fmt("trained %.4f, frozen prior %.4f (%.0f held-out transitions)", trained, prior,
                static_cast<double>(heldout.transitions.size()))};
}

std::vector<RunOutcome>& default_runs() {
    static std::vector<RunOutcome> runs = [] {
        std::vector<RunOutcome> out;
        for (uint64_t s = 0; s < 5; ++s) out.push_back(run_training(suite(), TrainOptions(), s));
        return out;
    }();
    return runs;
}

Verdict criterion5() {
    const auto t0 = std::chrono::steady_clock::now();
    double init = 0.0, final = 0.0;
    size_t updates = 0;
    for (const auto& r : default_runs()) {
        init += r.initial_success / 5;
        final += r.final_success / 5;
        updates = std::max(updates, r.result.metrics.size());
    }
    const double t = seconds_since(t0);
    return {final - init >= 0.10 && updates <= 200 && t < 600.0,
            fmt("held-out success %.3f -> %.3f after %.0f updates (mean of 5 seeds), %.1fs", init, final,
                static_cast<double>(updates), t)};
}

Verdict criterion6() {
    const auto rows = ablate_dream_length(suite(), TrainOptions(), {1, 4, 10}, {0, 1, 2, 3, 4});
    const double m1 = mean_success(rows, "1"), m4 = mean_success(rows, "4"), m10 = mean_success(rows, "10");
    return {m4 >= m1 + 0.03 && m4 >= m10 + 0.03,
            fmt("mean success at dream length 1: %.3f, 4: %.3f, 10: %.3f", m1, m4, m10)};
}

Verdict criterion7() {
    const auto rows = ablate_real_fraction(suite(), TrainOptions(), {0.0, 0.4, 1.0}, {0, 1, 2, 3, 4});
    const double m0 = mean_success(rows, "0"), m4 = mean_success(rows, "0.4"), m10 = mean_success(rows, "1");
    return {m4 >= m0 + 0.05 && m10 <= m4 + 0.02,
            fmt("mean success at expert fraction 0: %.3f, 0.4: %.3f, 1: %.3f", m0, m4, m10)};
}

Verdict criterion8() {
    const Experiment& e = suite();
    RuleJudge judge;
    WebEnv env;
    Rng rng(1008);
    GroupOptions o;
    o.rho_expert = 0.5;
    o.max_dream = 1;
    size_t slots = 0, experts = 0;
    while (slots < 10000) {
        const RolloutGroup g =
            build_group(e.store, sample_initial_state(e.store, rng), o, rng, &e.wm, env, PolicyParams(), 0, judge);
        for (const auto& m : g.members) experts += m.provenance == Provenance::Expert ? 1 : 0;
        slots += g.members.size();
    }
    const double frac = static_cast<double>(experts) / static_cast<double>(slots);
    return {frac >= 0.485 && frac <= 0.515, fmt("expert fraction %.4f over %.0f slots", frac, static_cast<double>(slots))};
}

Verdict criterion9() {
    uint64_t live = 0;
    size_t updates = 0;
    for (const auto& r : default_runs()) {
        live += r.live_steps_during_training;
        updates += r.result.metrics.size();
    }
    return {live == 0, fmt("%.0f live environment steps over %.0f imagined-mode updates", static_cast<double>(live),
                           static_cast<double>(updates))};
}

std::string slurp(const fs::path& p) {
    std::ifstream in(p, std::ios::binary);
    std::stringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

Verdict criterion10() {
    const fs::path dir = fs::temp_directory_path() / ("webdream-acceptance-" + std::to_string(::getpid()));
    fs::remove_all(dir);
    fs::create_directories(dir);
    auto run = [&](const std::string& args) {
        const std::string cmd = std::string(WEBDREAM_CLI) + " " + args + " >/dev/null 2>>" + (dir / "err.txt").string();
        const int status = std::system(cmd.c_str());
        return WIFEXITED(status) && WEXITSTATUS(status) == 0;
    };
    const std::string d = dir.string();
    bool ok = run("gen-tasks --seed 1 --n 10 --kinds shop --out " + d + "/tasks.jsonl") &&
              run("collect-corpus --tasks " + d + "/tasks.jsonl --n 1000 --seed 1 --out " + d + "/corpus.jsonl") &&
              run("train-wm --corpus " + d + "/corpus.jsonl --out " + d + "/wm.json");
    for (const char* name : {"a", "b"}) {
        std::ofstream(dir / (std::string(name) + ".json"))
            << nlohmann::json{{"seed", 17},
                              {"epochs", 3},
                              {"tasks_path", d + "/tasks.jsonl"},
                              {"wm_path", d + "/wm.json"},
                              {"out_dir", d + "/run-" + name}}
                   .dump();
        ok = ok && run("train-agent --config " + d + "/" + name + ".json");
    }
    const std::string a = slurp(dir / "run-a" / "metrics.csv");
    const std::string b = slurp(dir / "run-b" / "metrics.csv");
    const size_t rows = static_cast<size_t>(std::count(a.begin(), a.end(), '\n'));
    const bool same = ok && !a.empty() && a == b;
    const std::string err = slurp(dir / "err.txt");
    fs::remove_all(dir);
    if (!ok) return {false, "CLI run failed: " + err};
    return {same, std::string(same ? "byte-identical" : "different") + " metrics CSVs (" + std::to_string(rows) +
                      " lines each)"};
}

}  // namespace

int main(int argc, char** argv) {
    const std::vector<std::function<Verdict()>> criteria = {criterion1, criterion2, criterion3, criterion4,
                                                            criterion5, criterion6, criterion7, criterion8,
                                                            criterion9, criterion10};
    std::set<int> wanted;
    for (int i = 1; i < argc; ++i) wanted.insert(std::atoi(argv[i]));
    int failures = 0;
    for (size_t i = 0; i < criteria.size(); ++i) {
        const int n = static_cast<int>(i + 1);
        if (!wanted.empty() && !wanted.count(n)) continue;
        Verdict v;
        try {
            v = criteria[i]();
        } catch (const std::exception& e) {
            v = {false, std::string("error: ") + e.what()};
        }
        failures += v.pass ? 0 : 1;
        std::printf("criterion %d: %s %s\n", n, v.pass ? "PASS" : "FAIL", v.detail.c_str());
        std::fflush(stdout);
    }
    return failures;
}
