#include "webdream/policy.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <set>

#include "webdream/task.hpp"

namespace webdream {

namespace {

// Feature families; each cross is hashed with its family tag.
enum Family : uint64_t {
    kActBias = 1,
    kActLast = 2,
    kActAnswer = 3,
    kActHeading = 4,
    kActLink = 5,
    kActTextbox = 6,
    kActUrl = 7,
    kActAnswerHeading = 8,
    kActLast2 = 9,
    kElemRole = 20,
    kElemOverlap = 21,
    kElemMatched = 22,
    kElemLastTarget = 23,
    kElemName = 24,
    kElemOverlapHeading = 25,
    kContentAppear = 40,
    kContentQuery = 41,
    kContentName = 42,
    kContentAppearHeading = 43,
    kContentQueryAppear = 44,
    kFlagBias = 60,
    kFlagQuery = 61,
    kEndBias = 70,
};

uint32_t feature_index(size_t dim, std::initializer_list<uint64_t> parts) {
    uint64_t h = kFeatureSchema;
    for (uint64_t p : parts) h = hash_combine(h, p);
    return static_cast<uint32_t>(h % dim);
}

int overlap_bucket(const std::vector<std::string>& name_tokens, const std::set<std::string>& query, int* matched) {
    int hits = 0;
    for (const auto& t : name_tokens) hits += query.count(t) ? 1 : 0;
    if (matched) *matched = std::min(hits, 3);
    if (name_tokens.empty() || hits == 0) return 0;
    const double r = static_cast<double>(hits) / static_cast<double>(name_tokens.size());
    if (r < 0.5) return 1;
    if (r < 1.0) return 2;
    return 3;
}

int role_bit(const std::string& role) {
    if (role == "text") return 1;
    if (role == "link") return 2;
    if (role == "heading") return 4;
    if (role == "textbox") return 8;
    return 16;
}

ActionType act_of(const ActionToken& t) { return static_cast<ActionType>(t.value); }

}  // namespace

bool PolicyParams::all_finite() const {
    return std::all_of(theta.begin(), theta.end(), [](double v) { return std::isfinite(v); });
}

StepContext::StepContext(const Task& task, const AccessibilityTree& obs, std::span<const Action> history)
    : vocab_(&task.vocab), obs_(&obs) {
    const auto qtok = word_tokens(task.query);
    const std::set<std::string> query(qtok.begin(), qtok.end());

    std::vector<NodeId> last_targets;
    if (!history.empty()) {
        last1_ = static_cast<int>(history.back().type);
        if (history.back().has_target()) last_targets.push_back(history.back().element);
    }
    if (history.size() >= 2) {
        const Action& a2 = history[history.size() - 2];
        last2_ = static_cast<int>(a2.type);
        if (a2.has_target()) last_targets.push_back(a2.element);
    }

    const auto nodes = obs.preorder();
    bool heading_seen = false;
    for (const AccNode* n : nodes) {
        if (n->role == "heading" && !heading_seen) {
            heading_seen = true;
            heading_bucket_ = overlap_bucket(word_tokens(n->name), query, &heading_matched_);
        }
        if (!is_interactable_role(n->role) || slots_.size() >= kMaxElems) continue;
        slots_.push_back(n);
        SlotInfo info{};
        info.role_hash = fnv1a(n->role);
        info.name_hash = fnv1a(to_lower(n->name));
        info.overlap_bucket = overlap_bucket(word_tokens(n->name), query, &info.matched);
        info.is_textbox = n->role == "textbox";
        info.last_target = std::find(last_targets.begin(), last_targets.end(), n->id) != last_targets.end();
        if (n->role == "link") best_link_bucket_ = std::max(best_link_bucket_, info.overlap_bucket);
        if (info.is_textbox) {
            has_textbox_ = true;
            const int b = n->name.empty() ? 0 : 1 + overlap_bucket(word_tokens(n->name), query, nullptr);
            textbox_state_ = std::max(textbox_state_, b);
        }
        slot_info_.push_back(info);
    }

    for (const auto& c : task.vocab) {
        ContentInfo ci{};
        for (const AccNode* n : nodes) {
            if (contains_phrase(n->name, c)) ci.appear_mask |= role_bit(n->role);
        }
        ci.query_bucket = overlap_bucket(word_tokens(c), query, nullptr);
        ci.hash = fnv1a(to_lower(c));
        if (ci.appear_mask & 1) answer_visible_ = true;
        content_info_.push_back(ci);
    }
    url_hash_ = fnv1a(obs.url) % 1024;
}

std::vector<ActionToken> StepContext::legal_tokens(std::span<const ActionToken> prefix) const {
    using K = ActionToken::Kind;
    std::vector<ActionToken> out;
    const int n_content = static_cast<int>(vocab_->size());
    if (prefix.empty()) {
        for (ActionType t : kAllActionTypes) {
            bool ok = true;
            if (t == ActionType::Click) ok = !slots_.empty();
            if (t == ActionType::Type) ok = has_textbox_ && n_content > 0;
            if (t == ActionType::Stop) ok = n_content > 0;
            if (ok) out.push_back(ActionToken::act(t));
        }
        return out;
    }
    if (prefix[0].kind != K::ActType) return out;
    const ActionType t = act_of(prefix[0]);
    const size_t k = prefix.size();
    auto contents = [&] {
        for (int c = 0; c < n_content; ++c) out.push_back(ActionToken::content(c));
    };
    switch (t) {
        case ActionType::Click:
            if (k == 1) {
                for (size_t s = 0; s < slots_.size(); ++s) out.push_back(ActionToken::elem(static_cast<int>(s)));
            } else if (k == 2) {
                out.push_back(ActionToken::end());
            }
            break;
        case ActionType::Type:
            if (k == 1) {
                for (size_t s = 0; s < slots_.size(); ++s) {
                    if (slot_info_[s].is_textbox) out.push_back(ActionToken::elem(static_cast<int>(s)));
                }
            } else if (k == 2) {
                contents();
            } else if (k == 3) {
                out.push_back(ActionToken::flag(false));
                out.push_back(ActionToken::flag(true));
            } else if (k == 4) {
                out.push_back(ActionToken::end());
            }
            break;
        case ActionType::Stop:
            if (k == 1) contents();
            else if (k == 2) out.push_back(ActionToken::end());
            break;
        default:
            if (k == 1) out.push_back(ActionToken::end());
            break;
    }
    return out;
}

void StepContext::features(std::span<const ActionToken> prefix, const ActionToken& token, size_t dim,
                           SparseFeatures& out) const {
    using K = ActionToken::Kind;
    out.clear();
    const uint64_t act = prefix.empty() ? 0 : static_cast<uint64_t>(prefix[0].value);
    switch (token.kind) {
        case K::ActType: {
            const auto t = static_cast<uint64_t>(token.value);
            const uint64_t ans = answer_visible_ ? 1 : 0;
            out.push_back(feature_index(dim, {kActBias, t}));
            out.push_back(feature_index(dim, {kActLast, t, static_cast<uint64_t>(last1_)}));
            out.push_back(feature_index(dim, {kActLast2, t, static_cast<uint64_t>(last1_), static_cast<uint64_t>(last2_)}));
            out.push_back(feature_index(dim, {kActAnswer, t, ans}));
            out.push_back(feature_index(dim, {kActHeading, t, static_cast<uint64_t>(heading_bucket_),
                                              static_cast<uint64_t>(heading_matched_)}));
            out.push_back(feature_index(dim, {kActLink, t, static_cast<uint64_t>(best_link_bucket_)}));
            out.push_back(feature_index(dim, {kActTextbox, t, static_cast<uint64_t>(textbox_state_)}));
            out.push_back(feature_index(dim, {kActUrl, t, url_hash_}));
            out.push_back(feature_index(dim, {kActAnswerHeading, t, ans, static_cast<uint64_t>(heading_bucket_)}));
            break;
        }
        case K::ElemRef: {
            const SlotInfo& s = slot_info_.at(static_cast<size_t>(token.value));
            const auto ob = static_cast<uint64_t>(s.overlap_bucket);
            out.push_back(feature_index(dim, {kElemRole, act, s.role_hash}));
            out.push_back(feature_index(dim, {kElemOverlap, act, ob}));
            out.push_back(feature_index(dim, {kElemMatched, act, static_cast<uint64_t>(s.matched), s.role_hash}));
            out.push_back(feature_index(dim, {kElemLastTarget, act, s.last_target ? 1u : 0u}));
            out.push_back(feature_index(dim, {kElemName, act, s.name_hash}));
            out.push_back(feature_index(dim, {kElemOverlapHeading, act, ob, static_cast<uint64_t>(heading_bucket_)}));
            break;
        }
        case K::Content: {
            const ContentInfo& c = content_info_.at(static_cast<size_t>(token.value));
            const auto am = static_cast<uint64_t>(c.appear_mask);
            const auto qb = static_cast<uint64_t>(c.query_bucket);
            out.push_back(feature_index(dim, {kContentAppear, act, am}));
            out.push_back(feature_index(dim, {kContentQuery, act, qb}));
            out.push_back(feature_index(dim, {kContentName, act, c.hash}));
            out.push_back(feature_index(dim, {kContentAppearHeading, act, am, static_cast<uint64_t>(heading_bucket_)}));
            out.push_back(feature_index(dim, {kContentQueryAppear, act, qb, am}));
            break;
        }
        case K::Flag: {
            uint64_t qb = 0;
            if (prefix.size() >= 3 && prefix[2].kind == K::Content) {
                qb = static_cast<uint64_t>(content_info_.at(static_cast<size_t>(prefix[2].value)).query_bucket);
            }
            out.push_back(feature_index(dim, {kFlagBias, static_cast<uint64_t>(token.value)}));
            out.push_back(feature_index(dim, {kFlagQuery, static_cast<uint64_t>(token.value), qb}));
            break;
        }
        case K::End:
            out.push_back(feature_index(dim, {kEndBias}));
            break;
    }
}

int TokenDistribution::index_of(const ActionToken& token) const {
    for (size_t i = 0; i < tokens.size(); ++i) {
        if (tokens[i] == token) return static_cast<int>(i);
    }
    return -1;
}

TokenDistribution next_token_dist(const PolicyParams& params, const StepContext& ctx,
                                  std::span<const ActionToken> prefix) {
    TokenDistribution d;
    d.tokens = ctx.legal_tokens(prefix);
    const size_t n = d.tokens.size();
    d.logits.resize(n);
    d.probs.resize(n);
    d.features.resize(n);
    double max_logit = -INFINITY;
    for (size_t i = 0; i < n; ++i) {
        ctx.features(prefix, d.tokens[i], params.dim(), d.features[i]);
        double z = 0.0;
        for (uint32_t f : d.features[i]) z += params.theta[f];
        d.logits[i] = z;
        max_logit = std::max(max_logit, z);
    }
    double norm = 0.0;
    for (size_t i = 0; i < n; ++i) {
        d.probs[i] = std::exp(d.logits[i] - max_logit);
        norm += d.probs[i];
    }
    for (double& p : d.probs) p /= norm;
    return d;
}

std::vector<ActionToken> tokenize(const Action& action, const AccessibilityTree& obs,
                                  const std::vector<std::string>& vocab) {
    std::vector<ActionToken> out{ActionToken::act(action.type)};
    auto slot_of = [&](NodeId id) {
        int slot = 0;
        for (const AccNode* n : obs.preorder()) {
            if (!is_interactable_role(n->role)) continue;
            if (static_cast<size_t>(slot) >= kMaxElems) break;
            if (n->id == id) {
                if (action.type == ActionType::Type && n->role != "textbox") break;
                return slot;
            }
            ++slot;
        }
        throw UnknownElement(id);
    };
    auto content_of = [&](const std::string& c) {
        auto it = std::find(vocab.begin(), vocab.end(), c);
        if (it == vocab.end()) throw UnknownContent(c);
        return static_cast<int>(it - vocab.begin());
    };
    switch (action.type) {
        case ActionType::Click: out.push_back(ActionToken::elem(slot_of(action.element))); break;
        case ActionType::Type:
            out.push_back(ActionToken::elem(slot_of(action.element)));
            out.push_back(ActionToken::content(content_of(action.content)));
            out.push_back(ActionToken::flag(action.press_enter));
            break;
        case ActionType::Stop: out.push_back(ActionToken::content(content_of(action.content))); break;
        default: break;
    }
    out.push_back(ActionToken::end());
    return out;
}

Action detokenize(std::span<const ActionToken> tokens, const AccessibilityTree& obs,
                  const std::vector<std::string>& vocab) {
    using K = ActionToken::Kind;
    auto bad = [] { return std::invalid_argument("malformed action token sequence"); };
    if (tokens.empty() || tokens[0].kind != K::ActType || tokens.back().kind != K::End) throw bad();
    Action a;
    a.type = act_of(tokens[0]);
    auto node_at = [&](int slot) -> NodeId {
        int i = 0;
        for (const AccNode* n : obs.preorder()) {
            if (!is_interactable_role(n->role)) continue;
            if (i == slot) return n->id;
            ++i;
        }
        throw bad();
    };
    auto content_at = [&](int idx) -> const std::string& {
        if (idx < 0 || static_cast<size_t>(idx) >= vocab.size()) throw bad();
        return vocab[static_cast<size_t>(idx)];
    };
    switch (a.type) {
        case ActionType::Click:
            if (tokens.size() != 3 || tokens[1].kind != K::ElemRef) throw bad();
            a.element = node_at(tokens[1].value);
            break;
        case ActionType::Type:
            if (tokens.size() != 5 || tokens[1].kind != K::ElemRef || tokens[2].kind != K::Content ||
                tokens[3].kind != K::Flag) {
                throw bad();
            }
            a.element = node_at(tokens[1].value);
            a.content = content_at(tokens[2].value);
            a.press_enter = tokens[3].value != 0;
            break;
        case ActionType::Stop:
            if (tokens.size() != 3 || tokens[1].kind != K::Content) throw bad();
            a.content = content_at(tokens[1].value);
            break;
        default:
            if (tokens.size() != 2) throw bad();
            break;
    }
    return a;
}

SampledAction sample_action(const PolicyParams& params, const StepContext& ctx, const SamplingOptions& options,
                            Rng& rng) {
    SampledAction out;
    for (;;) {
        const TokenDistribution d = next_token_dist(params, ctx, out.tokens);
        if (d.tokens.empty()) throw std::logic_error("no legal token");
        size_t pick = 0;
        if (options.argmax || options.temperature <= 0.0) {
            pick = static_cast<size_t>(std::max_element(d.logits.begin(), d.logits.end()) - d.logits.begin());
        } else {
            // Sampling distribution: temperature-scaled, nucleus-truncated, renormalized.
            const double max_logit = *std::max_element(d.logits.begin(), d.logits.end());
            std::vector<double> q(d.tokens.size());
            double norm = 0.0;
            for (size_t i = 0; i < q.size(); ++i) {
                q[i] = std::exp((d.logits[i] - max_logit) / options.temperature);
                norm += q[i];
            }
            for (double& v : q) v /= norm;
            std::vector<size_t> order(q.size());
            std::iota(order.begin(), order.end(), 0);
            std::stable_sort(order.begin(), order.end(), [&](size_t a, size_t b) { return q[a] > q[b]; });
            size_t keep = 0;
            double mass = 0.0;
            while (keep < order.size()) {
                mass += q[order[keep++]];
                if (mass >= options.top_p) break;
            }
            double u = rng.uniform() * mass;
            pick = order[keep - 1];
            for (size_t j = 0; j < keep; ++j) {
                u -= q[order[j]];
                if (u < 0.0) {
                    pick = order[j];
                    break;
                }
            }
        }
        out.tokens.push_back(d.tokens[pick]);
        out.logprobs.push_back(std::log(d.probs[pick]));
        if (d.tokens[pick].kind == ActionToken::Kind::End) break;
    }
    out.action = detokenize(out.tokens, ctx.obs(), ctx.vocab());
    return out;
}

StepContext context_for_step(const Trajectory& trajectory, size_t index) {
    const size_t from = index >= 2 ? index - 2 : 0;
    std::vector<Action> history;
    for (size_t i = from; i < index; ++i) history.push_back(trajectory.steps[i].action);
    // The span only needs to outlive the constructor.
    return StepContext(*trajectory.task, trajectory.steps[index].obs, history);
}

namespace {

template <typename PerToken>
double walk_tokens(const PolicyParams& params, const Trajectory& trajectory, PerToken&& per_token) {
    double total = 0.0;
    for (size_t si = 0; si < trajectory.steps.size(); ++si) {
        const StepContext ctx = context_for_step(trajectory, si);
        const auto& tokens = trajectory.steps[si].tokens;
        for (size_t k = 0; k < tokens.size(); ++k) {
            const std::span<const ActionToken> prefix(tokens.data(), k);
            const TokenDistribution d = next_token_dist(params, ctx, prefix);
            const int idx = d.index_of(tokens[k]);
            if (idx < 0) throw IllegalToken(si, k);
            const double lp = std::log(d.probs[static_cast<size_t>(idx)]);
            total += lp;
            per_token(d, static_cast<size_t>(idx), lp);
        }
    }
    return total;
}

}  // namespace

SequenceLogprob logprob_sequence(const PolicyParams& params, const Trajectory& trajectory) {
    SequenceLogprob out;
    out.total = walk_tokens(params, trajectory,
                            [&](const TokenDistribution&, size_t, double lp) { out.per_token.push_back(lp); });
    return out;
}

double accumulate_grad_logprob(const PolicyParams& params, const Trajectory& trajectory, double scale,
                               std::vector<double>& out) {
    return walk_tokens(params, trajectory, [&](const TokenDistribution& d, size_t taken, double) {
        if (d.tokens.size() == 1) return;  // forced token: φ(taken) − E[φ] = 0
        for (uint32_t f : d.features[taken]) out[f] += scale;
        for (size_t i = 0; i < d.tokens.size(); ++i) {
            const double w = scale * d.probs[i];
            for (uint32_t f : d.features[i]) out[f] -= w;
        }
    });
}

std::vector<double> grad_logprob(const PolicyParams& params, const Trajectory& trajectory) {
    std::vector<double> g(params.dim(), 0.0);
    accumulate_grad_logprob(params, trajectory, 1.0, g);
    return g;
}

nlohmann::json params_to_json(const PolicyParams& params) {
    return {{"format_version", 1}, {"dimension", params.dim()}, {"vocab_hash", kFeatureSchema}, {"theta", params.theta}};
}

PolicyParams params_from_json(const nlohmann::json& j) {
    if (j.at("format_version").get<int>() != 1) throw std::invalid_argument("unsupported policy checkpoint version");
    if (j.at("vocab_hash").get<uint64_t>() != kFeatureSchema) {
        throw std::invalid_argument("policy checkpoint feature schema mismatch");
    }
    PolicyParams p(j.at("dimension").get<size_t>());
    p.theta = j.at("theta").get<std::vector<double>>();
    if (p.theta.size() != p.dim()) throw std::invalid_argument("policy checkpoint dimension mismatch");
    return p;
}

}  // namespace webdream
