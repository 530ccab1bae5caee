#include "webdream/corpus.hpp"

#include <cmath>
#include <istream>
#include <numeric>
#include <ostream>

namespace webdream {

namespace {

constexpr size_t kExploreSteps = 10;

// Uniform over concrete actions; type and stop draw their content afterwards.
Action random_action(const AccessibilityTree& obs, const std::vector<std::string>& vocab, Rng& rng) {
    enum class Slot { Click, TypeEnter, TypeNoEnter, ScrollUp, ScrollDown, GoBack, Stop };
    std::vector<std::pair<Slot, NodeId>> choices;
    for (const AccNode* n : obs.preorder()) {
        if (!is_interactable_role(n->role)) continue;
        choices.emplace_back(Slot::Click, n->id);
        if (n->role == "textbox" && !vocab.empty()) {
            choices.emplace_back(Slot::TypeEnter, n->id);
            choices.emplace_back(Slot::TypeNoEnter, n->id);
        }
    }
    choices.emplace_back(Slot::ScrollUp, 0);
    choices.emplace_back(Slot::ScrollDown, 0);
    choices.emplace_back(Slot::GoBack, 0);
    if (!vocab.empty()) choices.emplace_back(Slot::Stop, 0);

    const auto [slot, id] = choices[rng.below(choices.size())];
    auto content = [&] { return vocab[rng.below(vocab.size())]; };
    switch (slot) {
        case Slot::Click: return Action::click(id);
        case Slot::TypeEnter: return Action::type_text(id, content(), true);
        case Slot::TypeNoEnter: return Action::type_text(id, content(), false);
        case Slot::ScrollUp: return Action::scroll_up();
        case Slot::ScrollDown: return Action::scroll_down();
        case Slot::GoBack: return Action::go_back();
        case Slot::Stop: return Action::stop(content());
    }
    return Action::go_back();
}

std::optional<AccessibilityTree> try_parse(const std::string& text) {
    if (text.empty()) return std::nullopt;
    try {
        return parse_tree(text);
    } catch (const ParseError&) {
        return std::nullopt;
    }
}

}  // namespace

Transition make_transition(const AccessibilityTree& obs, const Action& action, const AccessibilityTree& next_obs) {
    Transition t{obs, action, next_obs, diff_trees(obs, next_obs), action.type == ActionType::Stop};
    if (t.terminal) t.delta.ops.emplace_back(ops::MarkTerminal{});
    return t;
}

TransitionCorpus collect_corpus(const WebEnv& env, const std::vector<GeneratedTask>& tasks, size_t n_transitions,
                                uint64_t seed) {
    if (n_transitions == 0) throw InvalidArgument("collect_corpus: n_transitions must be >= 1");
    if (tasks.empty()) throw InvalidArgument("collect_corpus: no tasks");
    TransitionCorpus corpus;
    corpus.provenance = "expert replay + uniform exploration, seed " + std::to_string(seed);
    Rng rng = Rng::substream(seed, "corpus");
    auto& out = corpus.transitions;

    for (size_t cycle = 0; out.size() < n_transitions; ++cycle) {
        const GeneratedTask& gt = tasks[cycle % tasks.size()];
        auto [state, obs] = env.reset(gt.task);
        std::vector<EnvState> along{state};
        for (const Action& a : gt.witness) {
            if (out.size() >= n_transitions) break;
            StepResult r = env.step(state, a);
            out.push_back(make_transition(obs, a, r.obs));
            if (r.state.done) break;
            state = std::move(r.state);
            obs = std::move(r.obs);
            along.push_back(state);
        }

        state = along[rng.below(along.size())];
        obs = observe(state);
        for (size_t k = 0; k < kExploreSteps && out.size() < n_transitions; ++k) {
            const Action a = random_action(obs, gt.task.vocab, rng);
            StepResult r = env.step(state, a);
            out.push_back(make_transition(obs, a, r.obs));
            if (r.state.done) break;
            state = std::move(r.state);
            obs = std::move(r.obs);
        }
    }
    return corpus;
}

CorpusRecord to_record(const Transition& t) {
    return {serialize_tree(t.obs), to_json(t.action), to_json(t.delta), serialize_tree(t.next_obs), t.terminal};
}

RawCorpus to_raw(const TransitionCorpus& corpus) {
    RawCorpus raw{corpus.instructions, corpus.provenance, {}};
    raw.records.reserve(corpus.transitions.size());
    for (const auto& t : corpus.transitions) raw.records.push_back(to_record(t));
    return raw;
}

CleanResult clean_corpus(const RawCorpus& raw) {
    CleanResult res;
    res.corpus.instructions = raw.instructions;
    res.corpus.provenance = raw.provenance;
    res.drops = {{kDropMissingObservation, 0}, {kDropInvalidAction, 0}, {kDropInconsistent, 0}};

    for (size_t i = 0; i < raw.records.size(); ++i) {
        const CorpusRecord& rec = raw.records[i];
        auto drop = [&](const char* reason) {
            ++res.drops[reason];
            res.dropped.push_back(i);
        };

        auto obs = try_parse(rec.obs);
        auto next = try_parse(rec.next_obs);
        if (!obs || !next) {
            drop(kDropMissingObservation);
            continue;
        }

        Action action;
        try {
            action = action_from_json(rec.action);
        } catch (const std::exception&) {
            drop(kDropInvalidAction);
            continue;
        }
        if (action.has_target()) {
            const AccNode* target = obs->find(action.element);
            if (!target || !is_interactable_role(target->role) ||
                (action.type == ActionType::Type && target->role != "textbox")) {
                drop(kDropInvalidAction);
                continue;
            }
        }

        try {
            EditScript delta = script_from_json(rec.delta);
            if (apply_script(*obs, delta) != *next || canonicalize(delta, *obs) != delta ||
                delta.is_terminal() != rec.terminal || rec.terminal != (action.type == ActionType::Stop)) {
                drop(kDropInconsistent);
                continue;
            }
            res.corpus.transitions.push_back({std::move(*obs), action, std::move(*next), std::move(delta), rec.terminal});
        } catch (const std::exception&) {
            drop(kDropInconsistent);
        }
    }
    return res;
}

CleanResult clean_corpus(const TransitionCorpus& corpus) { return clean_corpus(to_raw(corpus)); }

void write_corpus(std::ostream& out, const TransitionCorpus& corpus) {
    out << nlohmann::json{{"instructions", corpus.instructions}, {"provenance", corpus.provenance}}.dump() << '\n';
    for (const auto& t : corpus.transitions) {
        const CorpusRecord r = to_record(t);
        out << nlohmann::json{{"obs", r.obs},
                              {"action", r.action},
                              {"delta", r.delta},
                              {"next_obs", r.next_obs},
                              {"terminal", r.terminal}}
                   .dump()
            << '\n';
    }
}

RawCorpus read_corpus(std::istream& in) {
    RawCorpus raw;
    std::string line;
    size_t line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        if (line.empty()) continue;
        nlohmann::json j;
        try {
            j = nlohmann::json::parse(line);
        } catch (const nlohmann::json::exception& e) {
            throw InvalidArgument("corpus line " + std::to_string(line_no) + ": " + e.what());
        }
        if (line_no == 1 && j.contains("instructions")) {
            raw.instructions = j.at("instructions").get<std::string>();
            raw.provenance = j.value("provenance", std::string());
            continue;
        }
        CorpusRecord r;
        r.obs = j.value("obs", std::string());
        r.action = j.value("action", nlohmann::json());
        r.delta = j.value("delta", nlohmann::json());
        r.next_obs = j.value("next_obs", std::string());
        r.terminal = j.value("terminal", false);
        raw.records.push_back(std::move(r));
    }
    return raw;
}

std::pair<TransitionCorpus, TransitionCorpus> split_corpus(const TransitionCorpus& corpus, double heldout_fraction,
                                                           uint64_t seed) {
    if (!(heldout_fraction >= 0.0 && heldout_fraction <= 1.0)) {
        throw InvalidArgument("split_corpus: heldout_fraction must be in [0,1]");
    }
    std::vector<size_t> idx(corpus.transitions.size());
    std::iota(idx.begin(), idx.end(), 0);
    Rng rng = Rng::substream(seed, "corpus-split");
    rng.shuffle(idx);
    const auto n_held = static_cast<size_t>(std::llround(heldout_fraction * static_cast<double>(idx.size())));
    std::vector<bool> held(idx.size(), false);
    for (size_t i = 0; i < n_held; ++i) held[idx[i]] = true;

    TransitionCorpus train{corpus.instructions, {}, corpus.provenance};
    TransitionCorpus test{corpus.instructions, {}, corpus.provenance};
    for (size_t i = 0; i < idx.size(); ++i) (held[i] ? test : train).transitions.push_back(corpus.transitions[i]);
    return {std::move(train), std::move(test)};
}

}  // namespace webdream
