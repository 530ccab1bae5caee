#include "webdream/config.hpp"

#include <cmath>
#include <set>

namespace webdream {

namespace {

const std::set<std::string> kKeys = {
    "seed",       "epochs",        "group_size",     "temperature",  "top_p",         "max_steps",
    "max_dream",  "rho_expert",    "exact_count",    "clip_epsilon", "learning_rate", "momentum",
    "refresh_every", "mode",       "wm_path",        "tasks_path",   "out_dir",       "hallucination_rate",
    "checkpoint_every", "log_wallclock", "resume_from"};

template <typename T>
void read(const nlohmann::json& j, const char* key, T& out) {
    if (!j.contains(key)) return;
    const std::string path = std::string("config.") + key;
    const auto& v = j.at(key);
    if constexpr (std::is_same_v<T, bool>) {
        if (!v.is_boolean()) throw ConfigError(path, "expected a boolean");
    } else if constexpr (std::is_same_v<T, std::string>) {
        if (!v.is_string()) throw ConfigError(path, "expected a string");
    } else if constexpr (std::is_floating_point_v<T>) {
        if (!v.is_number()) throw ConfigError(path, "expected a number");
    } else {
        if (!v.is_number_unsigned() && !(v.is_number_integer() && v.get<int64_t>() >= 0)) {
            throw ConfigError(path, "expected a non-negative integer");
        }
    }
    out = v.get<T>();
}

void require(bool ok, const char* key, const char* reason) {
    if (!ok) throw ConfigError(std::string("config.") + key, reason);
}

}  // namespace

TrainOptions TrainConfig::train_options() const {
    TrainOptions o;
    o.epochs = epochs;
    o.group.group_size = group_size;
    o.group.rho_expert = rho_expert;
    o.group.exact_count = exact_count;
    o.group.mode = mode;
    o.group.max_steps = max_steps;
    o.group.max_dream = max_dream;
    o.group.sampling.temperature = temperature;
    o.group.sampling.top_p = top_p;
    o.learning_rate = learning_rate;
    o.clip_epsilon = clip_epsilon;
    o.momentum = momentum;
    o.refresh_every = refresh_every;
    o.log_wallclock = log_wallclock;
    return o;
}

TrainConfig config_from_json(const nlohmann::json& j, bool require_paths) {
    if (!j.is_object()) throw ConfigError("config", "expected an object");
    for (const auto& [k, v] : j.items()) {
        if (!kKeys.count(k)) throw ConfigError("config." + k, "unknown key");
    }
    TrainConfig c;
    read(j, "seed", c.seed);
    read(j, "epochs", c.epochs);
    read(j, "group_size", c.group_size);
    read(j, "temperature", c.temperature);
    read(j, "top_p", c.top_p);
    read(j, "max_steps", c.max_steps);
    read(j, "max_dream", c.max_dream);
    read(j, "rho_expert", c.rho_expert);
    read(j, "exact_count", c.exact_count);
    read(j, "clip_epsilon", c.clip_epsilon);
    read(j, "learning_rate", c.learning_rate);
    read(j, "momentum", c.momentum);
    read(j, "refresh_every", c.refresh_every);
    read(j, "wm_path", c.wm_path);
    read(j, "tasks_path", c.tasks_path);
    read(j, "out_dir", c.out_dir);
    read(j, "checkpoint_every", c.checkpoint_every);
    read(j, "log_wallclock", c.log_wallclock);
    read(j, "resume_from", c.resume_from);
    if (j.contains("mode")) {
        std::string mode;
        read(j, "mode", mode);
        try {
            c.mode = rollout_mode_from_name(mode);
        } catch (const InvalidArgument&) {
            throw ConfigError("config.mode", "expected one of imagined, real, mixed");
        }
    }
    if (j.contains("hallucination_rate")) {
        double h = 0.0;
        read(j, "hallucination_rate", h);
        require(h >= 0.0 && h <= 1.0, "hallucination_rate", "must be in [0,1]");
        c.hallucination_rate = h;
    }

    require(c.epochs >= 1, "epochs", "must be >= 1");
    require(c.group_size >= 2, "group_size", "must be >= 2");
    require(c.temperature > 0.0 && std::isfinite(c.temperature), "temperature", "must be > 0");
    require(c.top_p > 0.0 && c.top_p <= 1.0, "top_p", "must be in (0,1]");
    require(c.max_steps >= 1, "max_steps", "must be >= 1");
    require(c.max_dream >= 1, "max_dream", "must be >= 1");
    require(c.rho_expert >= 0.0 && c.rho_expert <= 1.0, "rho_expert", "must be in [0,1]");
    require(c.clip_epsilon > 0.0 && std::isfinite(c.clip_epsilon), "clip_epsilon", "must be > 0");
    require(c.learning_rate > 0.0 && std::isfinite(c.learning_rate), "learning_rate", "must be > 0");
    require(c.momentum >= 0.0 && c.momentum < 1.0, "momentum", "must be in [0,1)");
    require(c.refresh_every >= 1, "refresh_every", "must be >= 1");
    if (require_paths) {
        require(!c.tasks_path.empty(), "tasks_path", "required");
        require(!c.out_dir.empty(), "out_dir", "required");
        require(c.mode == RolloutMode::Real || !c.wm_path.empty(), "wm_path", "required unless mode is real");
    }
    return c;
}

nlohmann::json to_json(const TrainConfig& c) {
    nlohmann::json j{{"seed", c.seed},
                     {"epochs", c.epochs},
                     {"group_size", c.group_size},
                     {"temperature", c.temperature},
                     {"top_p", c.top_p},
                     {"max_steps", c.max_steps},
                     {"max_dream", c.max_dream},
                     {"rho_expert", c.rho_expert},
                     {"exact_count", c.exact_count},
                     {"clip_epsilon", c.clip_epsilon},
                     {"learning_rate", c.learning_rate},
                     {"momentum", c.momentum},
                     {"refresh_every", c.refresh_every},
                     {"mode", std::string(rollout_mode_name(c.mode))},
                     {"wm_path", c.wm_path},
                     {"tasks_path", c.tasks_path},
                     {"out_dir", c.out_dir},
                     {"checkpoint_every", c.checkpoint_every},
                     {"log_wallclock", c.log_wallclock},
                     {"resume_from", c.resume_from}};
    if (c.hallucination_rate) j["hallucination_rate"] = *c.hallucination_rate;
    return j;
}

}  // namespace webdream
