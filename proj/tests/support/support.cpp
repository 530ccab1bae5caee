#include "support.hpp"

#include <algorithm>
#include <cmath>
#include <set>

#include "webdream/experiment.hpp"

namespace webdream::testkit {

namespace {

const std::vector<std::string> kWords = {"Home", "Search", "laptop", "Red Shoe", "it's", "a\\b", "two\nlines", "",
                                         "Price $12.50", "Categories", "Ünïcode", "x"};

std::vector<std::string> child_roles() {
    std::vector<std::string> roles;
    for (const auto& r : known_roles()) {
        if (r != "root") roles.push_back(r);
    }
    return roles;
}

template <typename T>
const T& pick(Rng& rng, const std::vector<T>& v) {
    return v[rng.below(v.size())];
}

void collect(AccNode& n, std::vector<AccNode*>& out) {
    out.push_back(&n);
    for (auto& c : n.children) collect(c, out);
}

std::vector<AccNode*> nodes_of(AccessibilityTree& t) {
    std::vector<AccNode*> out;
    collect(t.root, out);
    return out;
}

void clear_focus(AccNode& n) {
    n.focused = false;
    for (auto& c : n.children) clear_focus(c);
}

NodeId fresh_id(Rng& rng, const std::set<NodeId>& used) {
    for (;;) {
        const auto id = static_cast<NodeId>(1 + rng.below(500));
        if (!used.count(id)) return id;
    }
}

std::set<NodeId> ids_of(const AccessibilityTree& t) {
    std::set<NodeId> out;
    for (const AccNode* n : t.preorder()) out.insert(n->id);
    return out;
}

AccNode random_subtree(Rng& rng, std::set<NodeId>& used, size_t max_nodes) {
    static const auto roles = child_roles();
    AccNode n;
    n.id = fresh_id(rng, used);
    used.insert(n.id);
    n.role = pick(rng, roles);
    n.name = pick(rng, kWords);
    const size_t kids = max_nodes > 1 ? rng.below(std::min<size_t>(max_nodes, 4)) : 0;
    size_t budget = max_nodes - 1;
    for (size_t i = 0; i < kids && budget > 0; ++i) {
        const size_t take = 1 + rng.below(budget);
        n.children.push_back(random_subtree(rng, used, take));
        budget -= take;
    }
    return n;
}

}  // namespace

AccessibilityTree random_tree(Rng& rng, size_t max_nodes) {
    AccessibilityTree t;
    t.url = "http://site" + std::to_string(rng.below(5)) + ".test/p" + std::to_string(rng.below(50));
    std::set<NodeId> used;
    t.root.id = fresh_id(rng, used);
    used.insert(t.root.id);
    t.root.role = "root";
    t.root.name = rng.bernoulli(0.5) ? "" : pick(rng, kWords);
    size_t budget = rng.below(std::max<size_t>(max_nodes, 1));
    while (budget > 0) {
        const size_t take = 1 + rng.below(budget);
        t.root.children.push_back(random_subtree(rng, used, take));
        budget -= take;
    }
    if (rng.bernoulli(0.5)) {
        auto nodes = nodes_of(t);
        pick(rng, nodes)->focused = true;
    }
    return t;
}

AccessibilityTree random_mutation(Rng& rng, const AccessibilityTree& tree, size_t max_edits) {
    AccessibilityTree t = tree;
    const size_t edits = 1 + rng.below(max_edits);
    for (size_t e = 0; e < edits; ++e) {
        auto nodes = nodes_of(t);
        std::set<NodeId> used = ids_of(t);
        switch (rng.below(7)) {
            case 0:
                pick(rng, nodes)->name = pick(rng, kWords) + std::to_string(rng.below(3));
                break;
            case 1: {
                AccNode* parent = pick(rng, nodes);
                const size_t at = rng.below(parent->children.size() + 1);
                AccNode sub = random_subtree(rng, used, 1 + rng.below(4));
                parent->children.insert(parent->children.begin() + static_cast<std::ptrdiff_t>(at), std::move(sub));
                break;
            }
            case 2: {
                AccNode* parent = pick(rng, nodes);
                if (!parent->children.empty()) {
                    parent->children.erase(parent->children.begin() +
                                           static_cast<std::ptrdiff_t>(rng.below(parent->children.size())));
                }
                break;
            }
            case 3:
                clear_focus(t.root);
                if (rng.bernoulli(0.8)) pick(rng, nodes)->focused = true;
                break;
            case 4: {
                // Swap two siblings: a move that diff must express as remove + insert.
                AccNode* parent = pick(rng, nodes);
                if (parent->children.size() >= 2) {
                    const size_t a = rng.below(parent->children.size());
                    const size_t b = rng.below(parent->children.size());
                    std::swap(parent->children[a], parent->children[b]);
                }
                break;
            }
            case 5:
                if (rng.bernoulli(0.3)) t.url += "/next";
                break;
            default:
                if (rng.bernoulli(0.2)) {
                    const std::string url = t.url;
                    t = random_tree(rng);
                    t.url = url;
                }
                break;
        }
    }
    return t;
}

EditScript random_script(Rng& rng, const AccessibilityTree& tree, size_t max_ops) {
    EditScript script;
    AccessibilityTree cur = tree;
    const size_t n = 1 + rng.below(max_ops);
    for (size_t i = 0; i < n; ++i) {
        auto nodes = nodes_of(cur);
        std::set<NodeId> used = ids_of(cur);
        EditOp op;
        switch (rng.below(7)) {
            case 0:
                op = ops::SetName{pick(rng, nodes)->id, pick(rng, kWords)};
                break;
            case 1: {
                AccNode* parent = pick(rng, nodes);
                op = ops::InsertNode{parent->id, rng.below(parent->children.size() + 1),
                                     random_subtree(rng, used, 1 + rng.below(3))};
                break;
            }
            case 2: {
                if (nodes.size() < 2) continue;
                op = ops::RemoveNode{nodes[1 + rng.below(nodes.size() - 1)]->id};
                break;
            }
            case 3:
                op = rng.bernoulli(0.8) ? ops::SetFocus{pick(rng, nodes)->id} : ops::SetFocus{std::nullopt};
                break;
            case 4:
                op = ops::SetUrl{cur.url + "/u" + std::to_string(rng.below(3))};
                break;
            case 5: {
                AccessibilityTree other = random_tree(rng, 8);
                op = ops::ReplaceTree{other.root};
                break;
            }
            default:
                if (i + 1 != n) continue;
                op = ops::MarkTerminal{};
                break;
        }
        script.ops.push_back(op);
        cur = apply_script(cur, EditScript{{op}});
    }
    return script;
}

PolicyParams random_params(Rng& rng, double scale, size_t dim) {
    PolicyParams p(dim);
    for (auto& w : p.theta) w = scale * (2.0 * rng.uniform() - 1.0);
    return p;
}

const ShopFixture& shop_fixture() {
    static const ShopFixture* f = [] {
        auto* s = new ShopFixture;
        TaskGenOptions gen;
        gen.n_pages = 10;
        s->tasks = generate_tasks(11, 10, {SiteKind::Shop}, gen);
        s->task_ptrs = task_ptrs(s->tasks);
        WebEnv prep;
        s->store = ExpertStore::from_tasks(prep, s->tasks);
        s->corpus = clean_corpus(collect_corpus(prep, s->tasks, 1000, 11)).corpus;
        s->wm = train_wm(s->corpus, kDefaultWmAlpha, 0.1);
        return s;
    }();
    return *f;
}

std::vector<Action> all_actions(const AccessibilityTree& obs, const std::vector<std::string>& vocab) {
    std::vector<Action> out;
    for (const AccNode* n : obs.preorder()) {
        if (is_interactable_role(n->role)) out.push_back(Action::click(n->id));
    }
    for (const AccNode* n : obs.preorder()) {
        if (n->role != "textbox") continue;
        for (const auto& v : vocab) {
            out.push_back(Action::type_text(n->id, v, true));
            out.push_back(Action::type_text(n->id, v, false));
        }
    }
    out.push_back(Action::scroll_up());
    out.push_back(Action::scroll_down());
    out.push_back(Action::go_back());
    for (const auto& v : vocab) out.push_back(Action::stop(v));
    return out;
}

double rel_error(double a, double b, double floor) {
    return std::abs(a - b) / std::max({std::abs(a), std::abs(b), floor});
}

}  // namespace webdream::testkit
