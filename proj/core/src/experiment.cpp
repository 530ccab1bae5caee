#include "webdream/experiment.hpp"

#include <cstdio>
#include <ostream>

namespace webdream {

std::vector<std::shared_ptr<const Task>> task_ptrs(const std::vector<GeneratedTask>& tasks) {
    std::vector<std::shared_ptr<const Task>> out;
    out.reserve(tasks.size());
    for (const auto& t : tasks) out.push_back(std::make_shared<const Task>(t.task));
    return out;
}

double success_rate(const WebEnv& env, const std::vector<std::shared_ptr<const Task>>& tasks,
                    const PolicyParams& theta, size_t max_steps, const Judge& judge) {
    if (tasks.empty()) throw InvalidArgument("success_rate: no tasks");
    SamplingOptions argmax;
    argmax.argmax = true;
    Rng unused(0);
    double total = 0.0;
    for (const auto& t : tasks) total += rollout_real(env, t, theta, max_steps, argmax, unused, judge).return_value;
    return total / static_cast<double>(tasks.size());
}

Experiment make_experiment(uint64_t seed, const SuiteOptions& options) {
    Experiment e;
    e.seed = seed;
    const size_t n = 2 * std::max(options.n_train, options.n_heldout);
    auto all = generate_tasks(seed, n, options.kinds, options.gen);
    for (size_t i = 0; i < all.size(); ++i) {
        auto& dst = i % 2 == 0 ? e.train : e.heldout;
        const size_t cap = i % 2 == 0 ? options.n_train : options.n_heldout;
        if (dst.size() < cap) dst.push_back(std::move(all[i]));
    }
    // A private environment: data preparation is not part of any training run.
    WebEnv env;
    e.store = ExpertStore::from_tasks(env, e.train);
    const TransitionCorpus corpus = clean_corpus(collect_corpus(env, e.train, options.corpus_size, seed)).corpus;
    e.wm = train_wm(corpus, options.wm_alpha, options.hallucination_rate);
    return e;
}

RunOutcome run_training(const Experiment& experiment, const TrainOptions& options, uint64_t seed,
                        const WorldModel* wm_override) {
    WebEnv env;
    RuleJudge judge;
    const auto train_tasks = task_ptrs(experiment.train);
    const auto heldout = task_ptrs(experiment.heldout);
    const size_t max_steps = options.group.max_steps;

    RunOutcome out;
    out.initial_success = success_rate(env, heldout, PolicyParams(options.feature_dim), max_steps, judge);
    const uint64_t before = env.live_steps();
    out.result = train(options, train_tasks, wm_override ? wm_override : &experiment.wm, env, experiment.store, seed,
                       judge);
    out.live_steps_during_training = env.live_steps() - before;
    out.final_success = success_rate(env, heldout, out.result.state.theta, max_steps, judge);
    return out;
}

std::string format_param(double v) {
    char buf[64];
    std::snprintf(buf, sizeof buf, "%g", v);
    return buf;
}

std::vector<AblationRow> ablate_dream_length(const Experiment& experiment, const TrainOptions& base,
                                             const std::vector<size_t>& lengths, const std::vector<uint64_t>& seeds) {
    std::vector<AblationRow> rows;
    for (size_t len : lengths) {
        for (uint64_t s : seeds) {
            TrainOptions o = base;
            o.group.max_dream = len;
            rows.push_back({std::to_string(len), s, run_training(experiment, o, s).final_success});
        }
    }
    return rows;
}

std::vector<AblationRow> ablate_real_fraction(const Experiment& experiment, const TrainOptions& base,
                                              const std::vector<double>& fractions,
                                              const std::vector<uint64_t>& seeds) {
    std::vector<AblationRow> rows;
    for (double f : fractions) {
        for (uint64_t s : seeds) {
            TrainOptions o = base;
            o.group.rho_expert = f;
            rows.push_back({format_param(f), s, run_training(experiment, o, s).final_success});
        }
    }
    return rows;
}

std::vector<AblationRow> ablate_wm_training(const Experiment& experiment, const TrainOptions& base,
                                            const std::vector<uint64_t>& seeds) {
    const WorldModel prior = frozen_prior_wm(experiment.wm.hallucination_rate());
    std::vector<AblationRow> rows;
    for (uint64_t s : seeds) rows.push_back({"trained", s, run_training(experiment, base, s).final_success});
    for (uint64_t s : seeds) rows.push_back({"frozen_prior", s, run_training(experiment, base, s, &prior).final_success});
    return rows;
}

double mean_success(const std::vector<AblationRow>& rows, const std::string& param) {
    double total = 0.0;
    size_t n = 0;
    for (const auto& r : rows) {
        if (r.param != param) continue;
        total += r.final_success_rate;
        ++n;
    }
    if (n == 0) throw InvalidArgument("mean_success: no rows for param '" + param + "'");
    return total / static_cast<double>(n);
}

void write_ablation_csv(std::ostream& out, const std::vector<AblationRow>& rows) {
    out << "param,seed,final_success_rate\n";
    for (const auto& r : rows) {
        char buf[64];
        std::snprintf(buf, sizeof buf, "%.6f", r.final_success_rate);
        out << r.param << ',' << r.seed << ',' << buf << '\n';
    }
}

}  // namespace webdream
