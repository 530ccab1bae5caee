#include "webdream/world_model.hpp"

#include <cmath>
#include <functional>

namespace webdream {

namespace {

constexpr const char* kContentSlot = "{{content}}";

std::string node_line(const AccNode& n) {
    std::string s = n.role;
    s += '\x1f';
    s += std::to_string(n.id);
    s += '\x1f';
    s += n.name;
    if (n.focused) s += "\x1f*";
    return s;
}

// Target node and its parent (null for the root).
std::pair<const AccNode*, const AccNode*> locate(const AccNode& root, NodeId id) {
    if (root.id == id) return {&root, nullptr};
    std::vector<const AccNode*> stack{&root};
    while (!stack.empty()) {
        const AccNode* n = stack.back();
        stack.pop_back();
        for (const auto& c : n->children) {
            if (c.id == id) return {&c, n};
            stack.push_back(&c);
        }
    }
    return {nullptr, nullptr};
}

void replace_all(std::string& s, const std::string& from, const std::string& to) {
    if (from.empty()) return;
    for (size_t pos = s.find(from); pos != std::string::npos; pos = s.find(from, pos + to.size())) {
        s.replace(pos, from.size(), to);
    }
}

void rewrite(nlohmann::json& j, const std::function<NodeId(NodeId)>& on_id,
             const std::function<void(std::string&)>& on_text) {
    if (j.is_object()) {
        for (auto it = j.begin(); it != j.end(); ++it) {
            const std::string& k = it.key();
            if ((k == "id" || k == "parent_id") && it->is_number_integer()) {
                *it = on_id(it->get<NodeId>());
            } else if ((k == "name" || k == "url") && it->is_string()) {
                std::string s = it->get<std::string>();
                on_text(s);
                *it = s;
            } else {
                rewrite(*it, on_id, on_text);
            }
        }
    } else if (j.is_array()) {
        for (auto& v : j) rewrite(v, on_id, on_text);
    }
}

bool forced_outcome(const AccessibilityTree& obs, const Action& action, EditScript& out) {
    if (action.type == ActionType::Stop) {
        out = EditScript{{ops::MarkTerminal{}}};
        return true;
    }
    if (action.has_target() && !obs.find(action.element)) {
        out = EditScript{};
        return true;
    }
    return false;
}

NodeId max_id(const AccNode& n) {
    NodeId m = n.id;
    for (const auto& c : n.children) m = std::max(m, max_id(c));
    return m;
}

std::string slug(const std::string& name) {
    std::string out;
    for (const auto& w : word_tokens(name)) {
        if (!out.empty()) out += '-';
        out += w;
    }
    return out;
}

std::string host_of(const std::string& url) {
    size_t slashes = 0;
    for (size_t i = 0; i < url.size(); ++i) {
        if (url[i] == '/' && ++slashes == 3) return url.substr(0, i);
    }
    return url;
}

// Next observation under the rule-based prior.
AccessibilityTree prior_next(const AccessibilityTree& obs, const Action& action) {
    AccessibilityTree next = obs;
    const AccNode* target = action.has_target() ? obs.find(action.element) : nullptr;
    auto focus = [&](NodeId id) {
        std::function<void(AccNode&)> set = [&](AccNode& n) {
            n.focused = n.id == id;
            for (auto& c : n.children) set(c);
        };
        set(next.root);
    };
    switch (action.type) {
        case ActionType::Click:
            if (target && target->role == "link") {
                const NodeId base = max_id(obs.root);
                next.url = host_of(obs.url) + "/" + slug(target->name) + "/";
                next.root = AccNode{base + 1, "root", target->name, false,
                                    {AccNode{base + 2, "heading", target->name, false, {}},
                                     AccNode{base + 3, "link", "Home", false, {}}}};
            } else if (target && target->role == "textbox") {
                focus(target->id);
            }
            break;
        case ActionType::Type:
            if (target) {
                focus(target->id);
                std::function<void(AccNode&)> fill = [&](AccNode& n) {
                    if (n.id == target->id) n.name = action.content;
                    for (auto& c : n.children) fill(c);
                };
                fill(next.root);
            }
            break;
        default:
            break;
    }
    return next;
}

}  // namespace

double ScriptCounts::prob(const std::string& key, double alpha) const {
    auto it = scripts.find(key);
    if (it == scripts.end()) return 0.0;
    return (it->second.count + alpha) / denominator(alpha);
}

const ScriptCounts::Entry* ScriptCounts::argmax() const {
    const Entry* best = nullptr;
    for (const auto& [k, e] : scripts) {
        if (!best || e.count > best->count) best = &e;
    }
    return best;
}

void ScriptCounts::add(const EditScript& script, double weight) {
    auto [it, inserted] = scripts.try_emplace(script_key(script), Entry{script, 0.0});
    it->second.count += weight;
    total += weight;
}

uint64_t fine_key(const AccessibilityTree& obs, const Action& action) {
    uint64_t h = hash_combine(fnv1a("fine"), fnv1a(to_json(action).dump()));
    const auto [target, parent] = action.has_target() ? locate(obs.root, action.element)
                                                      : std::pair<const AccNode*, const AccNode*>{nullptr, nullptr};
    if (!target) return hash_combine(h, fnv1a(serialize_tree(obs)));
    h = hash_combine(h, fnv1a(node_line(*target)));
    if (parent) {
        h = hash_combine(h, fnv1a(node_line(*parent)));
        for (const auto& s : parent->children) h = hash_combine(h, fnv1a(node_line(s)));
    }
    return h;
}

std::string coarse_key(const AccessibilityTree& obs, const Action& action) {
    const AccNode* target = action.has_target() ? obs.find(action.element) : nullptr;
    return (target ? target->role : std::string("-")) + "|" + std::string(action_type_name(action.type));
}

EditScript abstract_script(const EditScript& script, const Action& action) {
    nlohmann::json j = to_json(script);
    const NodeId target = action.has_target() ? action.element : -1;
    const bool typed = action.type == ActionType::Type && !action.content.empty();
    rewrite(
        j, [&](NodeId id) { return id == target ? NodeId{0} : id; },
        [&](std::string& s) {
            if (typed) replace_all(s, action.content, kContentSlot);
        });
    return script_from_json(j);
}

EditScript ground_script(const EditScript& tmpl, const Action& action) {
    nlohmann::json j = to_json(tmpl);
    const NodeId target = action.has_target() ? action.element : 0;
    const std::string content = action.type == ActionType::Type ? action.content : std::string();
    rewrite(
        j, [&](NodeId id) { return id == 0 ? target : id; },
        [&](std::string& s) { replace_all(s, kContentSlot, content); });
    return script_from_json(j);
}

WorldModel WorldModel::with_hallucination_rate(double rate) const {
    if (!(rate >= 0.0 && rate <= 1.0)) throw InvalidArgument("hallucination_rate must be in [0,1]");
    WorldModel wm = *this;
    wm.hallucination_rate_ = rate;
    return wm;
}

EditScript WorldModel::coarse_resolution(const AccessibilityTree& obs, const Action& action) const {
    auto it = coarse_.find(coarse_key(obs, action));
    if (it == coarse_.end()) return {};
    const auto* best = it->second.argmax();
    return best ? ground_script(best->script, action) : EditScript{};
}

Prediction WorldModel::predict(const AccessibilityTree& obs, const Action& action, Rng* rng) const {
    Prediction p;
    if (forced_outcome(obs, action, p.script)) {
        p.terminal = p.script.is_terminal();
        return p;
    }
    if (kind_ == Kind::FrozenPrior) return predict_prior(obs, action, rng);

    if (!rng) {
        // Argmax of the mixture over every script it can emit.
        std::vector<EditScript> candidates;
        if (auto f = fine_.find(fine_key(obs, action)); f != fine_.end()) {
            for (const auto& [k, e] : f->second.scripts) candidates.push_back(e.script);
        }
        candidates.push_back(coarse_resolution(obs, action));
        if (auto c = coarse_.find(coarse_key(obs, action)); c != coarse_.end()) {
            for (const auto& [k, e] : c->second.scripts) candidates.push_back(ground_script(e.script, action));
        }
        candidates.emplace_back();
        double best = -1.0;
        for (auto& s : candidates) {
            const double q = script_prob(obs, action, s);
            if (q > best) {
                best = q;
                p.script = std::move(s);
            }
        }
        p.logprob = std::log(best);
        p.terminal = p.script.is_terminal();
        return p;
    }

    auto draw = [&](const ScriptCounts& counts) -> const ScriptCounts::Entry* {
        double u = rng->uniform() * counts.denominator(alpha_);
        for (const auto& [k, e] : counts.scripts) {
            u -= e.count + alpha_;
            if (u < 0.0) return &e;
        }
        return nullptr;  // NOVEL
    };

    const auto f = fine_.find(fine_key(obs, action));
    const bool hallucinate = rng->bernoulli(hallucination_rate_);
    if (f != fine_.end() && !hallucinate) {
        const auto* e = draw(f->second);
        p.script = e ? e->script : coarse_resolution(obs, action);
    } else if (auto c = coarse_.find(coarse_key(obs, action)); c != coarse_.end()) {
        const auto* e = draw(c->second);
        if (e) p.script = ground_script(e->script, action);
    }
    p.logprob = std::log(script_prob(obs, action, p.script));
    p.terminal = p.script.is_terminal();
    return p;
}

double WorldModel::script_prob(const AccessibilityTree& obs, const Action& action, const EditScript& script) const {
    EditScript forced;
    if (forced_outcome(obs, action, forced)) return script == forced ? 1.0 : 0.0;
    if (kind_ == Kind::FrozenPrior) return prior_prob(obs, action, script);

    const auto f = fine_.find(fine_key(obs, action));
    const double wf = f == fine_.end() ? 0.0 : 1.0 - hallucination_rate_;
    const double wc = 1.0 - wf;
    double p = 0.0;
    if (wf > 0.0) {
        p += wf * f->second.prob(script_key(script), alpha_);
        if (script == coarse_resolution(obs, action)) p += wf * f->second.novel_prob(alpha_);
    }
    if (wc > 0.0) {
        const auto c = coarse_.find(coarse_key(obs, action));
        if (c == coarse_.end()) {
            if (script.empty()) p += wc;
        } else {
            for (const auto& [k, e] : c->second.scripts) {
                if (ground_script(e.script, action) == script) p += wc * c->second.prob(k, alpha_);
            }
            if (script.empty()) p += wc * c->second.novel_prob(alpha_);
        }
    }
    return p;
}

double WorldModel::class_prob(const AccessibilityTree& obs, const Action& action, const EditScript& script) const {
    EditScript forced;
    if (forced_outcome(obs, action, forced)) return script == forced ? 1.0 : 0.0;
    if (kind_ == Kind::FrozenPrior) {
        // Scripts the prior cannot emit share the smallest representable mass.
        return std::max(prior_prob(obs, action, script), 1e-12);
    }
    auto mass = [&](const ScriptCounts* counts, const std::string& key) {
        if (!counts) return 1.0;
        return counts->scripts.count(key) ? counts->prob(key, alpha_) : counts->novel_prob(alpha_);
    };
    const auto f = fine_.find(fine_key(obs, action));
    const auto c = coarse_.find(coarse_key(obs, action));
    const ScriptCounts* cc = c == coarse_.end() ? nullptr : &c->second;
    const double pc = mass(cc, script_key(abstract_script(script, action)));
    if (f == fine_.end()) return pc;
    return (1.0 - hallucination_rate_) * mass(&f->second, script_key(script)) + hallucination_rate_ * pc;
}

Prediction WorldModel::predict_prior(const AccessibilityTree& obs, const Action& action, Rng* rng) const {
    Prediction p;
    const bool noise = rng && rng->bernoulli(hallucination_rate_);
    if (!noise) {
        p.script = diff_trees(obs, prior_next(obs, action));
        if (!rng && hallucination_rate_ > 0.5) p.script = {};
    }
    p.logprob = std::log(prior_prob(obs, action, p.script));
    p.terminal = p.script.is_terminal();
    return p;
}

double WorldModel::prior_prob(const AccessibilityTree& obs, const Action& action, const EditScript& script) const {
    const EditScript rule = diff_trees(obs, prior_next(obs, action));
    double p = 0.0;
    if (script == rule) p += 1.0 - hallucination_rate_;
    if (script.empty()) p += hallucination_rate_;
    return p;
}

WorldModel train_wm(const TransitionCorpus& corpus, double alpha, double hallucination_rate) {
    if (corpus.transitions.empty()) throw EmptyCorpus();
    if (!(alpha > 0.0) || !std::isfinite(alpha)) throw InvalidArgument("alpha must be > 0");
    if (!(hallucination_rate >= 0.0 && hallucination_rate <= 1.0)) {
        throw InvalidArgument("hallucination_rate must be in [0,1]");
    }
    WorldModel wm;
    wm.alpha_ = alpha;
    wm.hallucination_rate_ = hallucination_rate;
    for (const auto& t : corpus.transitions) {
        wm.fine_[fine_key(t.obs, t.action)].add(t.delta);
        wm.coarse_[coarse_key(t.obs, t.action)].add(abstract_script(t.delta, t.action));
    }
    return wm;
}

WorldModel frozen_prior_wm(double hallucination_rate) {
    if (!(hallucination_rate >= 0.0 && hallucination_rate <= 1.0)) {
        throw InvalidArgument("hallucination_rate must be in [0,1]");
    }
    WorldModel wm;
    wm.kind_ = WorldModel::Kind::FrozenPrior;
    wm.hallucination_rate_ = hallucination_rate;
    return wm;
}

Prediction predict_delta(const WorldModel& wm, const AccessibilityTree& obs, const Action& action, Rng& rng) {
    return wm.predict(obs, action, &rng);
}

Prediction predict_argmax(const WorldModel& wm, const AccessibilityTree& obs, const Action& action) {
    return wm.predict(obs, action, nullptr);
}

ImaginedStep imagine_step(const WorldModel& wm, const AccessibilityTree& obs, const Action& action, Rng* rng) {
    const Prediction p = wm.predict(obs, action, rng);
    ImaginedStep out;
    out.terminal = p.terminal;
    try {
        out.obs = apply_script(obs, p.script);
    } catch (const ApplyError&) {
        out.obs = obs;
        out.recovered = true;
    }
    return out;
}

WmMetrics eval_wm(const WorldModel& wm, const TransitionCorpus& heldout) {
    if (heldout.transitions.empty()) throw EmptyCorpus();
    WmMetrics m;
    m.n = heldout.transitions.size();
    double exact = 0.0, terminal = 0.0, nll = 0.0;
    for (const auto& t : heldout.transitions) {
        const Prediction p = predict_argmax(wm, t.obs, t.action);
        exact += p.script == t.delta ? 1.0 : 0.0;
        terminal += p.terminal == t.terminal ? 1.0 : 0.0;
        nll -= std::log(wm.class_prob(t.obs, t.action, t.delta));
    }
    const auto n = static_cast<double>(m.n);
    m.exact_match_rate = exact / n;
    m.terminal_accuracy = terminal / n;
    m.mean_nll = nll / n;
    return m;
}

namespace {

nlohmann::json counts_to_json(const ScriptCounts& c) {
    auto arr = nlohmann::json::array();
    for (const auto& [k, e] : c.scripts) arr.push_back({{"script", to_json(e.script)}, {"count", e.count}});
    return arr;
}

ScriptCounts counts_from_json(const nlohmann::json& j) {
    ScriptCounts c;
    for (const auto& e : j) c.add(script_from_json(e.at("script")), e.at("count").get<double>());
    return c;
}

}  // namespace

nlohmann::json to_json(const WorldModel& wm) {
    nlohmann::json fine = nlohmann::json::object();
    for (const auto& [k, c] : wm.fine()) fine[std::to_string(k)] = counts_to_json(c);
    nlohmann::json coarse = nlohmann::json::object();
    for (const auto& [k, c] : wm.coarse()) coarse[k] = counts_to_json(c);
    return {{"format_version", 1},
            {"kind", wm.kind() == WorldModel::Kind::Trained ? "trained" : "frozen_prior"},
            {"alpha", wm.alpha()},
            {"hallucination_rate", wm.hallucination_rate()},
            {"fine", fine},
            {"coarse", coarse}};
}

WorldModel wm_from_json(const nlohmann::json& j) {
    if (j.at("format_version").get<int>() != 1) throw InvalidArgument("unsupported world model version");
    const std::string kind = j.at("kind").get<std::string>();
    WorldModel wm;
    if (kind == "frozen_prior") {
        wm = frozen_prior_wm(j.at("hallucination_rate").get<double>());
        return wm;
    }
    if (kind != "trained") throw InvalidArgument("unknown world model kind '" + kind + "'");
    wm.alpha_ = j.at("alpha").get<double>();
    if (!(wm.alpha_ > 0.0)) throw InvalidArgument("alpha must be > 0");
    wm = wm.with_hallucination_rate(j.at("hallucination_rate").get<double>());
    for (const auto& [k, v] : j.at("fine").items()) wm.fine_[std::stoull(k)] = counts_from_json(v);
    for (const auto& [k, v] : j.at("coarse").items()) wm.coarse_[k] = counts_from_json(v);
    return wm;
}

nlohmann::json to_json(const WmMetrics& m) {
    return {{"exact_match", m.exact_match_rate},
            {"nll", m.mean_nll},
            {"terminal_accuracy", m.terminal_accuracy},
            {"n", m.n}};
}

}  // namespace webdream
