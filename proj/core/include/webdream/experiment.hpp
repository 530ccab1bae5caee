#pragma once

#include <cstdint>
#include <iosfwd>
#include <memory>
#include <string>
#include <vector>

#include "webdream/config.hpp"
#include "webdream/corpus.hpp"
#include "webdream/gspo.hpp"
#include "webdream/rollout.hpp"
#include "webdream/task.hpp"
#include "webdream/world_model.hpp"

namespace webdream {

std::vector<std::shared_ptr<const Task>> task_ptrs(const std::vector<GeneratedTask>& tasks);

/// Mean judged reward of argmax rollouts in the real environment, one episode per task.
double success_rate(const WebEnv& env, const std::vector<std::shared_ptr<const Task>>& tasks,
                    const PolicyParams& theta, size_t max_steps, const Judge& judge);

struct SuiteOptions {
    size_t n_train = 20;
    size_t n_heldout = 20;
    std::vector<SiteKind> kinds{SiteKind::Shop};
    TaskGenOptions gen;
    size_t corpus_size = 2000;
    double wm_alpha = kDefaultWmAlpha;
    double hallucination_rate = 0.1;
};

/// Train/held-out tasks (alternating targets of the same sites), the expert
/// store of the training tasks, and a world model fitted on a corpus
/// collected from them.
struct Experiment {
    uint64_t seed = 0;
    std::vector<GeneratedTask> train;
    std::vector<GeneratedTask> heldout;
    ExpertStore store;
    WorldModel wm;
};

Experiment make_experiment(uint64_t seed, const SuiteOptions& options = {});

struct RunOutcome {
    double initial_success = 0.0;
    double final_success = 0.0;
    uint64_t live_steps_during_training = 0;
    TrainResult result;
};

/// Trains on experiment.train and scores argmax success on experiment.heldout.
RunOutcome run_training(const Experiment& experiment, const TrainOptions& options, uint64_t seed,
                        const WorldModel* wm_override = nullptr);

struct AblationRow {
    std::string param;
    uint64_t seed = 0;
    double final_success_rate = 0.0;
};

std::vector<AblationRow> ablate_dream_length(const Experiment& experiment, const TrainOptions& base,
                                             const std::vector<size_t>& lengths, const std::vector<uint64_t>& seeds);
std::vector<AblationRow> ablate_real_fraction(const Experiment& experiment, const TrainOptions& base,
                                              const std::vector<double>& fractions,
                                              const std::vector<uint64_t>& seeds);
/// Trained world model against the frozen prior at the same hallucination rate.
std::vector<AblationRow> ablate_wm_training(const Experiment& experiment, const TrainOptions& base,
                                            const std::vector<uint64_t>& seeds);

double mean_success(const std::vector<AblationRow>& rows, const std::string& param);
void write_ablation_csv(std::ostream& out, const std::vector<AblationRow>& rows);
/// Compact decimal rendering used for ablation param labels.
std::string format_param(double v);

}  // namespace webdream
