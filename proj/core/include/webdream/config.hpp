#pragma once

#include <cstdint>
#include <optional>
#include <stdexcept>
#include <string>

#include <json.hpp>

#include "webdream/gspo.hpp"

namespace webdream {

/// A config validation failure; key_path is e.g. "config.learning_rate".
class ConfigError : public std::invalid_argument {
public:
    ConfigError(std::string key_path, const std::string& reason)
        : std::invalid_argument(key_path + ": " + reason), key_path_(std::move(key_path)) {}
    const std::string& key_path() const { return key_path_; }

private:
    std::string key_path_;
};

struct TrainConfig {
    uint64_t seed = 0;
    size_t epochs = 10;
    size_t group_size = 8;
    double temperature = 0.7;
    double top_p = 0.9;
    size_t max_steps = 10;
    size_t max_dream = 5;
    double rho_expert = 0.5;
    bool exact_count = false;
    double clip_epsilon = 0.2;
    double learning_rate = 0.01;
    double momentum = 0.0;
    size_t refresh_every = 1;
    RolloutMode mode = RolloutMode::Imagined;
    std::string wm_path;
    std::string tasks_path;
    std::string out_dir;
    /// Overrides the world model's own rate when set.
    std::optional<double> hallucination_rate;
    size_t checkpoint_every = 0;
    bool log_wallclock = false;
    std::string resume_from;

    TrainOptions train_options() const;
};

/// Parses and validates; unknown keys and bad values raise ConfigError.
/// Ablation bases set require_paths = false since they build their own data.
TrainConfig config_from_json(const nlohmann::json& j, bool require_paths = true);
nlohmann::json to_json(const TrainConfig& c);

}  // namespace webdream
