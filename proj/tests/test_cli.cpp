#include <sys/wait.h>
#include <unistd.h>

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <sstream>

#include <gtest/gtest.h>
#include <json.hpp>

namespace fs = std::filesystem;

namespace {

struct CliRun {
    int status = 0;
    std::string out;
    std::string err;
};

std::string slurp(const fs::path& p) {
    std::ifstream in(p, std::ios::binary);
    std::stringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

class Cli : public ::testing::Test {
protected:
    static void SetUpTestSuite() {
        dir_ = fs::temp_directory_path() / ("webdream-cli-" + std::to_string(::getpid()));
        fs::remove_all(dir_);
        fs::create_directories(dir_);
        ASSERT_EQ(run("gen-tasks --seed 3 --n 4 --kinds shop --pages 8 --out " + path("tasks.jsonl")).status, 0);
        ASSERT_EQ(run("collect-corpus --tasks " + path("tasks.jsonl") + " --n 400 --seed 3 --out " +
                      path("corpus.jsonl"))
                      .status,
                  0);
        ASSERT_EQ(run("train-wm --corpus " + path("corpus.jsonl") + " --out " + path("wm.json")).status, 0);
    }
    static void TearDownTestSuite() { fs::remove_all(dir_); }

    static std::string path(const std::string& name) { return (dir_ / name).string(); }

    static CliRun run(const std::string& args) {
        const fs::path err = dir_ / "stderr.txt";
        const std::string cmd = std::string(WEBDREAM_CLI) + " " + args + " 2>" + err.string();
        CliRun r;
        FILE* p = popen(cmd.c_str(), "r");
        char buf[4096];
        size_t n;
        while ((n = fread(buf, 1, sizeof buf, p)) > 0) r.out.append(buf, n);
        const int status = pclose(p);
        r.status = WIFEXITED(status) ? WEXITSTATUS(status) : -1;
        r.err = slurp(err);
        return r;
    }

    static void write_config(const std::string& name, const std::string& out_dir) {
        std::ofstream(path(name)) << nlohmann::json{{"seed", 5},
                                                    {"epochs", 2},
                                                    {"group_size", 4},
                                                    {"tasks_path", path("tasks.jsonl")},
                                                    {"wm_path", path("wm.json")},
                                                    {"out_dir", path(out_dir)}}
                                         .dump();
    }

    static inline fs::path dir_;
};

}  // namespace

TEST_F(Cli, GenTasksIsDeterministic) {
    ASSERT_EQ(run("gen-tasks --seed 3 --n 4 --kinds shop --pages 8 --out " + path("again.jsonl")).status, 0);
    EXPECT_EQ(slurp(path("again.jsonl")), slurp(path("tasks.jsonl")));
}

TEST_F(Cli, TrainAgentIsDeterministic) {
    write_config("a.json", "run-a");
    write_config("b.json", "run-b");
    const CliRun a = run("train-agent --config " + path("a.json"));
    const CliRun b = run("train-agent --config " + path("b.json"));
    ASSERT_EQ(a.status, 0) << a.err;
    ASSERT_EQ(b.status, 0) << b.err;
    const std::string csv = slurp(path("run-a") + "/metrics.csv");
    EXPECT_FALSE(csv.empty());
    EXPECT_EQ(csv, slurp(path("run-b") + "/metrics.csv"));
    const auto summary = nlohmann::json::parse(a.out);
    EXPECT_EQ(summary.at("updates"), 8);
    EXPECT_EQ(summary.at("live_env_steps"), 0);

    const CliRun eval = run("eval-agent --checkpoint " + path("run-a") + "/checkpoint.json --tasks " + path("tasks.jsonl"));
    ASSERT_EQ(eval.status, 0) << eval.err;
    EXPECT_TRUE(nlohmann::json::parse(eval.out).contains("success_rate"));
}

TEST_F(Cli, EvalWmTrainedBeatsPrior) {
    const CliRun trained = run("eval-wm --wm " + path("wm.json") + " --corpus " + path("corpus.jsonl"));
    const CliRun prior = run("eval-wm --frozen-prior --corpus " + path("corpus.jsonl"));
    ASSERT_EQ(trained.status, 0) << trained.err;
    ASSERT_EQ(prior.status, 0) << prior.err;
    EXPECT_GT(nlohmann::json::parse(trained.out).at("exact_match").get<double>(),
              nlohmann::json::parse(prior.out).at("exact_match").get<double>());
}

TEST_F(Cli, ErrorsAreJsonOnStderr) {
    const CliRun alpha = run("train-wm --corpus " + path("corpus.jsonl") + " --alpha 0 --out " + path("x.json"));
    EXPECT_EQ(alpha.status, 1);
    EXPECT_EQ(nlohmann::json::parse(alpha.err).at("error"), "invalid_argument");
    EXPECT_FALSE(fs::exists(path("x.json")));

    std::ofstream(path("bad.json")) << R"({"learning_rate": "fast"})";
    const CliRun config = run("train-agent --config " + path("bad.json"));
    EXPECT_EQ(config.status, 1);
    const auto j = nlohmann::json::parse(config.err);
    EXPECT_EQ(j.at("error"), "config");
    EXPECT_EQ(j.at("key_path"), "config.learning_rate");

    const CliRun missing = run("train-agent --config " + path("nope.json"));
    EXPECT_EQ(missing.status, 1);
    EXPECT_EQ(nlohmann::json::parse(missing.err).at("error"), "io");

    const CliRun usage = run("train-wm");
    EXPECT_EQ(usage.status, 2);
    EXPECT_EQ(nlohmann::json::parse(usage.err).at("error"), "usage");
}
