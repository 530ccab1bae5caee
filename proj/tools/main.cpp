#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "webdream/config.hpp"
#include "webdream/corpus.hpp"
#include "webdream/experiment.hpp"
#include "webdream/gspo.hpp"
#include "webdream/io.hpp"
#include "webdream/rollout.hpp"
#include "webdream/task.hpp"
#include "webdream/world_model.hpp"

namespace fs = std::filesystem;
using nlohmann::json;
using namespace webdream;

namespace {

std::vector<std::string> split_list(const std::string& s) {
    std::vector<std::string> out;
    std::stringstream ss(s);
    std::string item;
    while (std::getline(ss, item, ',')) {
        if (!item.empty()) out.push_back(item);
    }
    return out;
}

/// "1..10" or "1,4,10".
std::vector<size_t> parse_sizes(const std::string& s) {
    const auto dots = s.find("..");
    std::vector<size_t> out;
    try {
        if (dots != std::string::npos) {
            const size_t lo = std::stoul(s.substr(0, dots));
            const size_t hi = std::stoul(s.substr(dots + 2));
            if (lo > hi) throw InvalidArgument("empty range '" + s + "'");
            for (size_t v = lo; v <= hi; ++v) out.push_back(v);
        } else {
            for (const auto& item : split_list(s)) out.push_back(std::stoul(item));
        }
    } catch (const std::logic_error& e) {
        if (dynamic_cast<const InvalidArgument*>(&e)) throw;
        throw InvalidArgument("cannot parse '" + s + "' as a list of integers");
    }
    if (out.empty()) throw InvalidArgument("empty list '" + s + "'");
    return out;
}

std::vector<double> parse_doubles(const std::string& s) {
    std::vector<double> out;
    for (const auto& item : split_list(s)) {
        try {
            out.push_back(std::stod(item));
        } catch (const std::logic_error&) {
            throw InvalidArgument("cannot parse '" + item + "' as a number");
        }
    }
    if (out.empty()) throw InvalidArgument("empty list '" + s + "'");
    return out;
}

std::vector<uint64_t> seed_list(uint64_t first, size_t n) {
    std::vector<uint64_t> out;
    for (size_t i = 0; i < n; ++i) out.push_back(first + i);
    return out;
}

void print_json(const json& j) { std::cout << j.dump(2) << '\n'; }

WorldModel load_wm(const std::string& path) {
    const json j = read_json_file(path);
    try {
        return wm_from_json(j);
    } catch (const json::exception& e) {
        throw IoError(path, std::string("malformed world model: ") + e.what());
    }
}

TransitionCorpus load_clean_corpus(const std::string& path, CleanResult* report = nullptr) {
    CleanResult r = clean_corpus(read_corpus_file(path));
    if (report) *report = r;
    return std::move(r.corpus);
}

PolicyParams load_policy(const std::string& path) {
    const json j = read_json_file(path);
    try {
        return j.contains("policy") ? params_from_json(j.at("policy")) : params_from_json(j);
    } catch (const json::exception& e) {
        throw IoError(path, std::string("malformed checkpoint: ") + e.what());
    }
}

// gen-tasks

struct GenTasksArgs {
    uint64_t seed = 0;
    size_t n = 20;
    std::string kinds = "shop";
    std::string out;
    TaskGenOptions gen;
};

int gen_tasks(const GenTasksArgs& a) {
    std::vector<SiteKind> kinds;
    for (const auto& k : split_list(a.kinds)) kinds.push_back(site_kind_from_name(k));
    const auto tasks = generate_tasks(a.seed, a.n, kinds, a.gen);
    write_tasks_file(a.out, tasks);
    print_json({{"tasks", tasks.size()}, {"out", a.out}});
    return 0;
}

// collect-corpus

struct CollectArgs {
    std::string tasks;
    size_t n = 2000;
    uint64_t seed = 0;
    std::string out;
};

int collect(const CollectArgs& a) {
    const auto tasks = read_tasks_file(a.tasks);
    WebEnv env;
    const TransitionCorpus raw = collect_corpus(env, tasks, a.n, a.seed);
    const CleanResult cleaned = clean_corpus(raw);
    write_corpus_file(a.out, cleaned.corpus);
    print_json({{"collected", raw.transitions.size()},
                {"kept", cleaned.corpus.transitions.size()},
                {"drops", cleaned.drops},
                {"out", a.out}});
    return 0;
}

// train-wm / eval-wm

struct TrainWmArgs {
    std::string corpus;
    double alpha = kDefaultWmAlpha;
    double hallucination_rate = 0.0;
    double heldout_fraction = 0.2;
    uint64_t seed = 0;
    std::string out;
};

int train_wm_cmd(const TrainWmArgs& a) {
    if (!(a.alpha > 0.0)) throw InvalidArgument("--alpha must be > 0");
    CleanResult report;
    const TransitionCorpus corpus = load_clean_corpus(a.corpus, &report);
    const auto [train, heldout] = split_corpus(corpus, a.heldout_fraction, a.seed);
    const WorldModel wm = train_wm(train, a.alpha, a.hallucination_rate);
    write_file(a.out, to_json(wm).dump() + "\n");
    print_json({{"train", train.transitions.size()},
                {"heldout", heldout.transitions.size()},
                {"dropped", report.dropped.size()},
                {"out", a.out}});
    return 0;
}

struct EvalWmArgs {
    std::string wm;
    bool frozen_prior = false;
    double hallucination_rate = 0.0;
    std::string corpus;
    double heldout_fraction = 0.2;
    uint64_t seed = 0;
};

int eval_wm_cmd(const EvalWmArgs& a) {
    if (a.frozen_prior == !a.wm.empty()) throw InvalidArgument("give exactly one of --wm and --frozen-prior");
    const WorldModel wm = a.frozen_prior ? frozen_prior_wm(a.hallucination_rate) : load_wm(a.wm);
    const TransitionCorpus corpus = load_clean_corpus(a.corpus);
    const TransitionCorpus heldout =
        a.heldout_fraction >= 1.0 ? corpus : split_corpus(corpus, a.heldout_fraction, a.seed).second;
    print_json(to_json(eval_wm(wm, heldout)));
    return 0;
}

// train-agent

/// Rewrites metrics.csv keeping only rows logged before `step`.
void truncate_metrics(const fs::path& path, uint64_t step) {
    std::string kept = std::string(kMetricsHeader) + "\n";
    if (fs::exists(path)) {
        std::istringstream in(read_file(path.string()));
        std::string line;
        std::getline(in, line);
        while (std::getline(in, line)) {
            if (line.empty()) continue;
            if (std::stoull(line.substr(0, line.find(','))) < step) kept += line + "\n";
        }
    }
    write_file(path.string(), kept);
}

int train_agent(const std::string& config_path) {
    const TrainConfig cfg = config_from_json(read_json_file(config_path));
    const auto generated = read_tasks_file(cfg.tasks_path);
    if (generated.empty()) throw IoError(cfg.tasks_path, "no tasks");

    std::optional<WorldModel> wm;
    if (!cfg.wm_path.empty()) {
        wm = load_wm(cfg.wm_path);
        if (cfg.hallucination_rate) wm = wm->with_hallucination_rate(*cfg.hallucination_rate);
    }

    ExpertStore store;
    {
        WebEnv prep;
        store = ExpertStore::from_tasks(prep, generated);
    }

    const TrainOptions options = cfg.train_options();
    std::optional<OptimizerState> resume;
    if (!cfg.resume_from.empty()) {
        resume = optimizer_from_json(read_json_file(cfg.resume_from));
        if (resume->theta.dim() != options.feature_dim) throw IoError(cfg.resume_from, "feature dimension mismatch");
    }

    const fs::path out_dir(cfg.out_dir);
    fs::create_directories(out_dir);
    const fs::path metrics_path = out_dir / "metrics.csv";
    truncate_metrics(metrics_path, resume ? resume->step_count : 0);
    std::ofstream metrics(metrics_path, std::ios::app);
    if (!metrics) throw IoError(metrics_path.string(), "cannot open for append");

    auto on_update = [&](const MetricsRow& row, const OptimizerState& state) {
        metrics << metrics_csv_line(row) << '\n';
        metrics.flush();
        if (cfg.checkpoint_every > 0 && state.step_count % cfg.checkpoint_every == 0) {
            const fs::path p = out_dir / ("checkpoint-" + std::to_string(state.step_count) + ".json");
            write_file(p.string(), to_json(state).dump() + "\n");
        }
    };

    WebEnv env;
    RuleJudge judge;
    const auto tasks = task_ptrs(generated);
    const TrainResult result = train(options, tasks, wm ? &*wm : nullptr, env, store, cfg.seed, judge,
                                     resume ? &*resume : nullptr, on_update);
    const fs::path final_path = out_dir / "checkpoint.json";
    write_file(final_path.string(), to_json(result.state).dump() + "\n");

    double last_return = 0.0;
    if (!result.metrics.empty()) last_return = result.metrics.back().mean_return;
    print_json({{"updates", result.state.step_count},
                {"mode", std::string(rollout_mode_name(cfg.mode))},
                {"live_env_steps", env.live_steps()},
                {"last_mean_return", last_return},
                {"metrics", metrics_path.string()},
                {"checkpoint", final_path.string()}});
    return 0;
}

// eval-agent

struct EvalAgentArgs {
    std::string checkpoint;
    std::string tasks;
    size_t max_steps = 10;
};

int eval_agent(const EvalAgentArgs& a) {
    const PolicyParams theta = load_policy(a.checkpoint);
    const auto tasks = task_ptrs(read_tasks_file(a.tasks));
    WebEnv env;
    RuleJudge judge;
    print_json({{"success_rate", success_rate(env, tasks, theta, a.max_steps, judge)}, {"n", tasks.size()}});
    return 0;
}

// ablate

struct AblateArgs {
    std::string config;
    uint64_t seed = 0;
    size_t seeds = 5;
    std::string out;
    std::string lengths = "1..10";
    std::string fracs = "0,0.2,0.4,0.6,0.8,1.0";
};

int ablate(const std::string& which, const AblateArgs& a) {
    TrainConfig cfg;
    if (!a.config.empty()) cfg = config_from_json(read_json_file(a.config), false);
    SuiteOptions suite;
    suite.hallucination_rate = cfg.hallucination_rate.value_or(0.1);
    const Experiment exp = make_experiment(a.seed, suite);
    const TrainOptions base = cfg.train_options();
    const auto seeds = seed_list(a.seed, a.seeds);

    std::vector<AblationRow> rows;
    if (which == "dream-length") {
        rows = ablate_dream_length(exp, base, parse_sizes(a.lengths), seeds);
    } else if (which == "real-fraction") {
        rows = ablate_real_fraction(exp, base, parse_doubles(a.fracs), seeds);
    } else {
        rows = ablate_wm_training(exp, base, seeds);
    }

    std::ostringstream csv;
    write_ablation_csv(csv, rows);
    if (a.out.empty()) {
        std::cout << csv.str();
    } else {
        write_file(a.out, csv.str());
        print_json({{"rows", rows.size()}, {"out", a.out}});
    }
    return 0;
}

json error_json(const std::exception& e) {
    json j{{"message", e.what()}};
    if (const auto* c = dynamic_cast<const ConfigError*>(&e)) {
        j["error"] = "config";
        j["key_path"] = c->key_path();
    } else if (const auto* io = dynamic_cast<const IoError*>(&e)) {
        j["error"] = "io";
        j["path"] = io->path();
    } else if (dynamic_cast<const fs::filesystem_error*>(&e)) {
        j["error"] = "io";
    } else if (dynamic_cast<const std::invalid_argument*>(&e)) {
        j["error"] = "invalid_argument";
    } else {
        j["error"] = "runtime";
    }
    return j;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Model-based web agent training on synthetic sites"};
    app.require_subcommand(1);

    GenTasksArgs gen;
    auto* gen_cmd = app.add_subcommand("gen-tasks", "Generate tasks with witness trajectories (JSONL)");
    gen_cmd->add_option("--seed", gen.seed)->required();
    gen_cmd->add_option("--n", gen.n, "Number of tasks")->required();
    gen_cmd->add_option("--kinds", gen.kinds, "Comma list of shop, wiki, forum")->capture_default_str();
    gen_cmd->add_option("--out", gen.out)->required();
    gen_cmd->add_option("--pages", gen.gen.n_pages)->capture_default_str();
    gen_cmd->add_option("--branching", gen.gen.branching)->capture_default_str();
    gen_cmd->add_option("--per-site", gen.gen.tasks_per_site)->capture_default_str();

    CollectArgs col;
    auto* col_cmd = app.add_subcommand("collect-corpus", "Collect and clean a transition corpus");
    col_cmd->add_option("--tasks", col.tasks)->required();
    col_cmd->add_option("--n", col.n)->capture_default_str();
    col_cmd->add_option("--seed", col.seed)->capture_default_str();
    col_cmd->add_option("--out", col.out)->required();

    TrainWmArgs twm;
    auto* twm_cmd = app.add_subcommand("train-wm", "Fit the world model on the training split of a corpus");
    twm_cmd->add_option("--corpus", twm.corpus)->required();
    twm_cmd->add_option("--alpha", twm.alpha)->capture_default_str();
    twm_cmd->add_option("--out", twm.out)->required();
    twm_cmd->add_option("--hallucination-rate", twm.hallucination_rate)->capture_default_str();
    twm_cmd->add_option("--heldout-fraction", twm.heldout_fraction)->capture_default_str();
    twm_cmd->add_option("--seed", twm.seed, "Split seed")->capture_default_str();

    EvalWmArgs ewm;
    auto* ewm_cmd = app.add_subcommand("eval-wm", "Score a world model on the held-out split; JSON to stdout");
    ewm_cmd->add_option("--wm", ewm.wm);
    ewm_cmd->add_flag("--frozen-prior", ewm.frozen_prior, "Evaluate the rule-based prior instead");
    ewm_cmd->add_option("--hallucination-rate", ewm.hallucination_rate, "For --frozen-prior")->capture_default_str();
    ewm_cmd->add_option("--corpus", ewm.corpus)->required();
    ewm_cmd->add_option("--heldout-fraction", ewm.heldout_fraction, "1 scores the whole corpus")->capture_default_str();
    ewm_cmd->add_option("--seed", ewm.seed, "Split seed")->capture_default_str();

    std::string config_path;
    auto* ta_cmd = app.add_subcommand("train-agent", "Train a policy from a JSON config");
    ta_cmd->add_option("--config", config_path)->required();

    EvalAgentArgs ea;
    auto* ea_cmd = app.add_subcommand("eval-agent", "Argmax success rate of a checkpoint on a task file");
    ea_cmd->add_option("--checkpoint", ea.checkpoint)->required();
    ea_cmd->add_option("--tasks", ea.tasks)->required();
    ea_cmd->add_option("--max-steps", ea.max_steps)->capture_default_str();

    AblateArgs ab;
    auto* ab_cmd = app.add_subcommand("ablate", "Sweep one training parameter; CSV param,seed,final_success_rate");
    ab_cmd->require_subcommand(1);
    auto add_common = [&](CLI::App* c) {
        c->add_option("--config", ab.config, "Base training config (paths not required)");
        c->add_option("--seed", ab.seed, "Experiment seed; cell seeds are seed..seed+seeds-1")->capture_default_str();
        c->add_option("--seeds", ab.seeds)->capture_default_str();
        c->add_option("--out", ab.out, "CSV path (stdout when omitted)");
    };
    auto* dl_cmd = ab_cmd->add_subcommand("dream-length", "Sweep the imagined rollout cap");
    add_common(dl_cmd);
    dl_cmd->add_option("--lengths", ab.lengths, "Range a..b or comma list")->capture_default_str();
    auto* rf_cmd = ab_cmd->add_subcommand("real-fraction", "Sweep the expert slot probability");
    add_common(rf_cmd);
    rf_cmd->add_option("--fracs", ab.fracs)->capture_default_str();
    auto* wt_cmd = ab_cmd->add_subcommand("wm-training", "Trained world model against the frozen prior");
    add_common(wt_cmd);

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e);
    } catch (const CLI::CallForAllHelp& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        std::cerr << json{{"error", "usage"}, {"message", e.what()}}.dump() << '\n';
        return 2;
    }

    try {
        if (*gen_cmd) return gen_tasks(gen);
        if (*col_cmd) return collect(col);
        if (*twm_cmd) return train_wm_cmd(twm);
        if (*ewm_cmd) return eval_wm_cmd(ewm);
        if (*ta_cmd) return train_agent(config_path);
        if (*ea_cmd) return eval_agent(ea);
        if (*dl_cmd) return ablate("dream-length", ab);
        if (*rf_cmd) return ablate("real-fraction", ab);
        if (*wt_cmd) return ablate("wm-training", ab);
    } catch (const std::exception& e) {
        std::cerr << error_json(e).dump() << '\n';
        return 1;
    }
    return 1;
}
