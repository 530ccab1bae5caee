#include "webdream/task.hpp"

#include <deque>
#include <map>
#include <set>

#include "webdream/common.hpp"
#include "webdream/env.hpp"

namespace webdream {

const char* const kInstructions =
    "You operate a web browser to complete the user's request. Each step, issue exactly one command: "
    "click [id], type [id] [content] [press_enter_after=0|1], scroll [up], scroll [down], go_back, or "
    "stop [answer]. Answer with N/A only when no textual answer is required.";

namespace {

std::string join(const std::vector<std::string>& parts, const std::string& sep) {
    std::string out;
    for (size_t i = 0; i < parts.size(); ++i) {
        if (i) out += sep;
        out += parts[i];
    }
    return out;
}

std::string make_query(const WebSite& site, PageId target) {
    const std::string& title = site.page(target).title;
    const auto crumbs = site.breadcrumb(target);
    const std::string where = crumbs.empty() ? std::string() : " in " + join(crumbs, " > ");
    switch (site.kind) {
        case SiteKind::Shop: return "What is the price of " + title + where + "?";
        case SiteKind::Wiki: return "Open the article about " + title + where + ".";
        case SiteKind::Forum: return "Who wrote the post " + title + where + "?";
    }
    return title;
}

GoalPredicate make_goal(const WebSite& site, PageId target) {
    GoalPredicate g;
    g.terminal_page = site.page(target).url;
    if (site.kind != SiteKind::Wiki) g.answer = AnswerPattern{site.page(target).attribute, AnswerPattern::Mode::Exact};
    return g;
}

using StateKey = std::tuple<PageId, std::string, std::map<NodeId, std::string>, size_t, std::optional<NodeId>>;

StateKey key_of(const EnvState& s) {
    return {s.page_id, s.search_query, s.form_values, s.scroll_offset, s.focused};
}

}  // namespace

std::optional<std::vector<Action>> find_witness(const WebSite& site, const Task& task, size_t max_steps) {
    if (max_steps == 0) return std::nullopt;
    auto shared = std::make_shared<const WebSite>(site);
    const std::string answer = task.goal.answer ? task.goal.answer->text : std::string("N/A");

    std::vector<std::string> search_terms;
    for (PageId id : site.item_pages()) search_terms.push_back(site.page(id).title);

    struct Node {
        EnvState state;
        std::vector<Action> path;
    };
    std::deque<Node> frontier;
    frontier.push_back({initial_state(shared, task.start_page), {}});
    std::set<StateKey> visited{key_of(frontier.front().state)};

    while (!frontier.empty()) {
        Node cur = std::move(frontier.front());
        frontier.pop_front();
        const AccessibilityTree obs = observe(cur.state);
        if (goal_holds(task.goal, obs, answer)) {
            cur.path.push_back(Action::stop(answer));
            return cur.path;
        }
        if (cur.path.size() + 1 >= max_steps) continue;

        std::vector<Action> moves;
        for (const AccNode* n : obs.preorder()) {
            if (is_interactable_role(n->role)) moves.push_back(Action::click(n->id));
        }
        for (const AccNode* n : obs.preorder()) {
            if (n->role != "textbox") continue;
            for (const auto& term : search_terms) moves.push_back(Action::type_text(n->id, term, true));
        }
        moves.push_back(Action::scroll_down());
        moves.push_back(Action::scroll_up());
        moves.push_back(Action::go_back());

        for (const Action& a : moves) {
            StepResult r = step(cur.state, a);
            if (r.unknown_element) continue;
            if (!visited.insert(key_of(r.state)).second) continue;
            Node next{std::move(r.state), cur.path};
            next.path.push_back(a);
            frontier.push_back(std::move(next));
        }
    }
    return std::nullopt;
}

std::vector<GeneratedTask> generate_tasks(uint64_t seed, size_t n, const std::vector<SiteKind>& kinds,
                                          const TaskGenOptions& options) {
    if (n == 0) throw InvalidArgument("generate_tasks: n must be >= 1");
    if (kinds.empty()) throw InvalidArgument("generate_tasks: no site kinds");
    if (options.tasks_per_site == 0) throw InvalidArgument("generate_tasks: tasks_per_site must be >= 1");

    WebEnv env;
    std::map<std::pair<int, size_t>, std::vector<PageId>> targets;  // (kind, site index) -> shuffled items
    std::vector<GeneratedTask> out;
    out.reserve(n);
    for (size_t i = 0; i < n; ++i) {
        const SiteKind kind = kinds[i % kinds.size()];
        const size_t per_kind_index = i / kinds.size();
        const size_t site_index = per_kind_index / options.tasks_per_site;
        const uint64_t site_seed =
            hash_combine(hash_combine(seed, fnv1a(site_kind_name(kind))), site_index) % 1000000007ULL;
        auto site = env.site(site_seed, kind, options.n_pages, options.branching);

        auto& pool = targets[{static_cast<int>(kind), site_index}];
        const size_t slot = per_kind_index % options.tasks_per_site;
        if (pool.empty()) {
            pool = site->item_pages();
            if (pool.empty()) throw InvalidArgument("generate_tasks: site has no item pages");
            Rng rng = Rng::substream(seed, "task-targets", site_seed);
            rng.shuffle(pool);
        }
        const PageId target = pool[slot % pool.size()];

        GeneratedTask gt;
        Task& t = gt.task;
        t.task_id = std::string(site_kind_name(kind)) + "-" + std::to_string(i);
        t.query = make_query(*site, target);
        t.site_seed = site_seed;
        t.site_kind = kind;
        t.site_pages = options.n_pages;
        t.site_branching = options.branching;
        t.start_page = kHomePage;
        t.goal = make_goal(*site, target);
        t.vocab = site->content_vocab();
        auto witness = find_witness(*site, t, options.max_witness_steps);
        if (!witness) throw InvalidArgument("generate_tasks: no witness within step limit for " + t.task_id);
        gt.witness = std::move(*witness);
        out.push_back(std::move(gt));
    }
    return out;
}

nlohmann::json to_json(const Task& t) {
    return {{"task_id", t.task_id},
            {"query", t.query},
            {"site_seed", t.site_seed},
            {"site_kind", std::string(site_kind_name(t.site_kind))},
            {"site_pages", t.site_pages},
            {"site_branching", t.site_branching},
            {"start_page", t.start_page},
            {"goal", to_json(t.goal)},
            {"instructions", t.instructions},
            {"vocab", t.vocab}};
}

Task task_from_json(const nlohmann::json& j) {
    Task t;
    t.task_id = j.at("task_id").get<std::string>();
    t.query = j.at("query").get<std::string>();
    t.site_seed = j.at("site_seed").get<uint64_t>();
    t.site_kind = site_kind_from_name(j.at("site_kind").get<std::string>());
    t.site_pages = j.at("site_pages").get<size_t>();
    t.site_branching = j.at("site_branching").get<size_t>();
    t.start_page = j.at("start_page").get<PageId>();
    t.goal = goal_from_json(j.at("goal"));
    t.instructions = j.value("instructions", std::string(kInstructions));
    t.vocab = j.at("vocab").get<std::vector<std::string>>();
    return t;
}

nlohmann::json to_json(const GeneratedTask& t) {
    auto witness = nlohmann::json::array();
    for (const auto& a : t.witness) witness.push_back(to_json(a));
    return {{"task", to_json(t.task)}, {"witness", witness}};
}

GeneratedTask generated_task_from_json(const nlohmann::json& j) {
    GeneratedTask t;
    t.task = task_from_json(j.at("task"));
    for (const auto& a : j.at("witness")) t.witness.push_back(action_from_json(a));
    return t;
}

}  // namespace webdream
