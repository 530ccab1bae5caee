#pragma once

#include <cstdint>
#include <map>
#include <string>

#include <json.hpp>

#include "webdream/acctree.hpp"
#include "webdream/action.hpp"
#include "webdream/common.hpp"
#include "webdream/corpus.hpp"
#include "webdream/edit_script.hpp"

namespace webdream {

class EmptyCorpus : public std::invalid_argument {
public:
    EmptyCorpus() : std::invalid_argument("corpus is empty") {}
};

/// Smoothed counts over canonical scripts for one context key. The NOVEL
/// outcome carries alpha pseudo-counts on top of alpha per observed script.
struct ScriptCounts {
    struct Entry {
        EditScript script;
        double count = 0.0;
    };
    /// Keyed by script_key(script) so iteration order is deterministic.
    std::map<std::string, Entry> scripts;
    double total = 0.0;

    double denominator(double alpha) const { return total + alpha * static_cast<double>(scripts.size() + 1); }
    double prob(const std::string& key, double alpha) const;
    double novel_prob(double alpha) const { return alpha / denominator(alpha); }
    /// Highest-count script; ties go to the smallest key. Null when empty.
    const Entry* argmax() const;
    void add(const EditScript& script, double weight = 1.0);
};

/// Fine key: the action plus the target's line, its parent's line and its
/// siblings' lines (whole tree for untargeted actions).
uint64_t fine_key(const AccessibilityTree& obs, const Action& action);
/// Coarse key: target role and action type.
std::string coarse_key(const AccessibilityTree& obs, const Action& action);
/// Replaces the target id with 0 and the typed content with a placeholder.
EditScript abstract_script(const EditScript& script, const Action& action);
/// Inverse of abstract_script for a new action.
EditScript ground_script(const EditScript& tmpl, const Action& action);

struct Prediction {
    EditScript script;
    /// log probability of the script under the full mixture.
    double logprob = 0.0;
    bool terminal = false;
};

struct ImaginedStep {
    AccessibilityTree obs;
    bool terminal = false;
    /// The predicted script failed to apply and was replaced by the empty script.
    bool recovered = false;
};

struct WmMetrics {
    double exact_match_rate = 0.0;
    double mean_nll = 0.0;
    double terminal_accuracy = 0.0;
    size_t n = 0;
};

class WorldModel {
public:
    enum class Kind { Trained, FrozenPrior };

    WorldModel() = default;

    Kind kind() const { return kind_; }
    double alpha() const { return alpha_; }
    double hallucination_rate() const { return hallucination_rate_; }
    WorldModel with_hallucination_rate(double rate) const;
    const std::map<uint64_t, ScriptCounts>& fine() const { return fine_; }
    const std::map<std::string, ScriptCounts>& coarse() const { return coarse_; }

    /// Samples a script (argmax when rng is null).
    Prediction predict(const AccessibilityTree& obs, const Action& action, Rng* rng) const;
    /// Probability of `script` under the sampling mixture.
    double script_prob(const AccessibilityTree& obs, const Action& action, const EditScript& script) const;
    /// Probability of the script's outcome class: an unobserved script is
    /// charged the NOVEL mass, so the value is always positive.
    double class_prob(const AccessibilityTree& obs, const Action& action, const EditScript& script) const;

    friend WorldModel train_wm(const TransitionCorpus& corpus, double alpha, double hallucination_rate);
    friend WorldModel frozen_prior_wm(double hallucination_rate);
    friend WorldModel wm_from_json(const nlohmann::json& j);

private:
    Prediction predict_prior(const AccessibilityTree& obs, const Action& action, Rng* rng) const;
    double prior_prob(const AccessibilityTree& obs, const Action& action, const EditScript& script) const;
    EditScript coarse_resolution(const AccessibilityTree& obs, const Action& action) const;

    Kind kind_ = Kind::Trained;
    double alpha_ = 0.1;
    double hallucination_rate_ = 0.0;
    std::map<uint64_t, ScriptCounts> fine_;
    std::map<std::string, ScriptCounts> coarse_;
};

constexpr double kDefaultWmAlpha = 0.1;

/// Maximum-likelihood counts. Throws EmptyCorpus, InvalidArgument for alpha <= 0.
WorldModel train_wm(const TransitionCorpus& corpus, double alpha = kDefaultWmAlpha, double hallucination_rate = 0.0);

/// Rule-based prior that needs no corpus: links open a stub page named after
/// the link, typing fills the field, everything else leaves the page as is.
/// With probability hallucination_rate it predicts no change.
WorldModel frozen_prior_wm(double hallucination_rate);

Prediction predict_delta(const WorldModel& wm, const AccessibilityTree& obs, const Action& action, Rng& rng);
Prediction predict_argmax(const WorldModel& wm, const AccessibilityTree& obs, const Action& action);

/// Never throws on bad predictions; unappliable scripts become the empty script.
ImaginedStep imagine_step(const WorldModel& wm, const AccessibilityTree& obs, const Action& action, Rng* rng);

/// Throws EmptyCorpus.
WmMetrics eval_wm(const WorldModel& wm, const TransitionCorpus& heldout);

nlohmann::json to_json(const WorldModel& wm);
WorldModel wm_from_json(const nlohmann::json& j);
nlohmann::json to_json(const WmMetrics& m);

}  // namespace webdream
