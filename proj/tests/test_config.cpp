#include <gtest/gtest.h>

#include "webdream/config.hpp"

using namespace webdream;

namespace {

nlohmann::json minimal() { return {{"tasks_path", "t.json"}, {"out_dir", "out"}, {"wm_path", "wm.json"}}; }

std::string key_path_of(const nlohmann::json& j, bool require_paths = true) {
    try {
        config_from_json(j, require_paths);
    } catch (const ConfigError& e) {
        return e.key_path();
    }
    return "";
}

}  // namespace

TEST(Config, Defaults) {
    const TrainConfig c = config_from_json(minimal());
    EXPECT_EQ(c.epochs, 10u);
    EXPECT_EQ(c.group_size, 8u);
    EXPECT_EQ(c.temperature, 0.7);
    EXPECT_EQ(c.top_p, 0.9);
    EXPECT_EQ(c.max_steps, 10u);
    EXPECT_EQ(c.max_dream, 5u);
    EXPECT_EQ(c.rho_expert, 0.5);
    EXPECT_EQ(c.clip_epsilon, 0.2);
    EXPECT_EQ(c.learning_rate, 0.01);
    EXPECT_EQ(c.mode, RolloutMode::Imagined);
    EXPECT_FALSE(c.hallucination_rate.has_value());
    EXPECT_FALSE(c.log_wallclock);

    const TrainOptions o = c.train_options();
    EXPECT_EQ(o.epochs, 10u);
    EXPECT_EQ(o.group.group_size, 8u);
    EXPECT_EQ(o.group.max_dream, 5u);
    EXPECT_EQ(o.group.sampling.temperature, 0.7);
    EXPECT_EQ(o.group.rho_expert, 0.5);
}

TEST(Config, ErrorsCarryKeyPaths) {
    auto with = [](const char* key, nlohmann::json v) {
        auto j = minimal();
        j[key] = std::move(v);
        return j;
    };
    EXPECT_EQ(key_path_of(with("learning_rte", 0.1)), "config.learning_rte");
    EXPECT_EQ(key_path_of(with("learning_rate", "fast")), "config.learning_rate");
    EXPECT_EQ(key_path_of(with("learning_rate", 0.0)), "config.learning_rate");
    EXPECT_EQ(key_path_of(with("epochs", -1)), "config.epochs");
    EXPECT_EQ(key_path_of(with("epochs", 1.5)), "config.epochs");
    EXPECT_EQ(key_path_of(with("group_size", 1)), "config.group_size");
    EXPECT_EQ(key_path_of(with("top_p", 1.5)), "config.top_p");
    EXPECT_EQ(key_path_of(with("temperature", 0)), "config.temperature");
    EXPECT_EQ(key_path_of(with("rho_expert", 2)), "config.rho_expert");
    EXPECT_EQ(key_path_of(with("max_dream", 0)), "config.max_dream");
    EXPECT_EQ(key_path_of(with("mode", "dream")), "config.mode");
    EXPECT_EQ(key_path_of(with("exact_count", 1)), "config.exact_count");
    EXPECT_EQ(key_path_of(with("hallucination_rate", 1.1)), "config.hallucination_rate");
    EXPECT_EQ(key_path_of(with("momentum", 1.0)), "config.momentum");
    EXPECT_EQ(key_path_of(with("seed", -3)), "config.seed");
    EXPECT_EQ(key_path_of(nlohmann::json::array()), "config");
}

TEST(Config, RequiredPaths) {
    auto j = minimal();
    j.erase("wm_path");
    EXPECT_EQ(key_path_of(j), "config.wm_path");
    j["mode"] = "real";
    EXPECT_EQ(key_path_of(j), "");
    j.erase("tasks_path");
    EXPECT_EQ(key_path_of(j), "config.tasks_path");
    EXPECT_EQ(key_path_of(nlohmann::json::object(), false), "");
    EXPECT_EQ(key_path_of({{"learning_rate", -1.0}}, false), "config.learning_rate");
}

TEST(Config, JsonRoundTrip) {
    auto j = minimal();
    j["seed"] = 42;
    j["mode"] = "mixed";
    j["hallucination_rate"] = 0.3;
    j["exact_count"] = true;
    j["learning_rate"] = 0.05;
    const TrainConfig c = config_from_json(j);
    const nlohmann::json back = to_json(c);
    EXPECT_EQ(to_json(config_from_json(back)), back);
    EXPECT_EQ(back.at("mode"), "mixed");
    EXPECT_EQ(back.at("hallucination_rate"), 0.3);
    EXPECT_EQ(back.at("seed"), 42);
    auto big = minimal();
    big["seed"] = UINT64_MAX;
    EXPECT_EQ(config_from_json(big).seed, UINT64_MAX);
}
