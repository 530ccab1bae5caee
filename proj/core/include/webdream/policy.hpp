#pragma once

#include <cstdint>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include <json.hpp>

#include "webdream/acctree.hpp"
#include "webdream/action.hpp"
#include "webdream/common.hpp"
#include "webdream/trajectory.hpp"

namespace webdream {

struct Task;

/// Interactable slots visible to the policy per observation.
constexpr size_t kMaxElems = 32;
constexpr size_t kDefaultFeatureDim = size_t{1} << 16;
/// Identifies the token grammar and feature layout in checkpoints.
constexpr uint64_t kFeatureSchema = fnv1a("webdream-policy-features-v1");

/// θ: one weight per hashed (feature, token) cross.
struct PolicyParams {
    std::vector<double> theta;

    explicit PolicyParams(size_t dim = kDefaultFeatureDim) : theta(dim, 0.0) {}
    size_t dim() const { return theta.size(); }
    bool all_finite() const;
    bool operator==(const PolicyParams&) const = default;
};

class UnknownElement : public std::invalid_argument {
public:
    explicit UnknownElement(NodeId id) : std::invalid_argument("element " + std::to_string(id) + " is not a slot"), id_(id) {}
    NodeId id() const { return id_; }

private:
    NodeId id_;
};

class UnknownContent : public std::invalid_argument {
public:
    explicit UnknownContent(const std::string& c) : std::invalid_argument("content '" + c + "' not in vocabulary") {}
};

class IllegalToken : public std::invalid_argument {
public:
    IllegalToken(size_t step, size_t position)
        : std::invalid_argument("illegal token at step " + std::to_string(step) + ", position " +
                                std::to_string(position)),
          step_(step),
          position_(position) {}
    size_t step() const { return step_; }
    size_t position() const { return position_; }

private:
    size_t step_;
    size_t position_;
};

/// Hashed feature indices (each with value 1).
using SparseFeatures = std::vector<uint32_t>;

/// Conditioning context for one decision step: query, vocabulary, the current
/// observation and the last two actions. Everything expensive about the
/// observation is computed once here.
class StepContext {
public:
    StepContext(const Task& task, const AccessibilityTree& obs, std::span<const Action> history);

    /// Interactable nodes in preorder, truncated to kMaxElems.
    const std::vector<const AccNode*>& slots() const { return slots_; }
    const std::vector<std::string>& vocab() const { return *vocab_; }
    const AccessibilityTree& obs() const { return *obs_; }

    std::vector<ActionToken> legal_tokens(std::span<const ActionToken> prefix) const;
    void features(std::span<const ActionToken> prefix, const ActionToken& token, size_t dim, SparseFeatures& out) const;

private:
    struct SlotInfo {
        uint64_t role_hash;
        uint64_t name_hash;
        int overlap_bucket;
        int matched;
        bool is_textbox;
        bool last_target;
    };
    struct ContentInfo {
        int appear_mask;
        int query_bucket;
        uint64_t hash;
    };

    const std::vector<std::string>* vocab_;
    const AccessibilityTree* obs_;
    std::vector<const AccNode*> slots_;
    std::vector<SlotInfo> slot_info_;
    std::vector<ContentInfo> content_info_;
    int last1_ = static_cast<int>(kNumActionTypes);
    int last2_ = static_cast<int>(kNumActionTypes);
    int heading_bucket_ = 0;
    int heading_matched_ = 0;
    int best_link_bucket_ = 0;
    int textbox_state_ = 0;
    bool answer_visible_ = false;
    uint64_t url_hash_ = 0;
    bool has_textbox_ = false;
};

struct TokenDistribution {
    std::vector<ActionToken> tokens;
    std::vector<double> probs;
    std::vector<double> logits;
    std::vector<SparseFeatures> features;

    /// Index of `token` among the legal tokens, or -1.
    int index_of(const ActionToken& token) const;
};

/// Softmax over θ·φ(context, token) restricted to grammar-legal tokens.
TokenDistribution next_token_dist(const PolicyParams& params, const StepContext& ctx,
                                  std::span<const ActionToken> prefix);

std::vector<ActionToken> tokenize(const Action& action, const AccessibilityTree& obs,
                                  const std::vector<std::string>& vocab);
Action detokenize(std::span<const ActionToken> tokens, const AccessibilityTree& obs,
                  const std::vector<std::string>& vocab);

struct SamplingOptions {
    double temperature = 0.7;
    double top_p = 0.9;
    bool argmax = false;
};

struct SampledAction {
    Action action;
    std::vector<ActionToken> tokens;
    /// Log-probabilities under the unmodified policy distribution.
    std::vector<double> logprobs;
};

SampledAction sample_action(const PolicyParams& params, const StepContext& ctx, const SamplingOptions& options,
                            Rng& rng);

/// Context for step `index` of a trajectory (history = up to two previous actions).
StepContext context_for_step(const Trajectory& trajectory, size_t index);

struct SequenceLogprob {
    double total = 0.0;
    std::vector<double> per_token;
};

/// Throws IllegalToken when a stored token is not legal under its context.
SequenceLogprob logprob_sequence(const PolicyParams& params, const Trajectory& trajectory);

/// Exact ∇θ of logprob_sequence: Σ_tokens φ(taken) − E[φ].
std::vector<double> grad_logprob(const PolicyParams& params, const Trajectory& trajectory);
/// out += scale · grad_logprob(params, trajectory), returning the total logprob.
double accumulate_grad_logprob(const PolicyParams& params, const Trajectory& trajectory, double scale,
                               std::vector<double>& out);

nlohmann::json params_to_json(const PolicyParams& params);
PolicyParams params_from_json(const nlohmann::json& j);

}  // namespace webdream
