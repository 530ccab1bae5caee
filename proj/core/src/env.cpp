#include "webdream/env.hpp"

#include <algorithm>

#include "webdream/task.hpp"

namespace webdream {

namespace {

struct RenderedElement {
    NodeId id;
    std::string role;
    std::string name;
    NodeId container;
};

// Elements of the current page in document order, with dynamic results and form values filled in.
std::vector<RenderedElement> page_elements(const EnvState& s) {
    const WebSite& site = *s.site;
    const Page& page = site.page(s.page_id);
    std::vector<RenderedElement> out;
    for (const auto& e : page.elements) {
        RenderedElement r{e.id, e.role, e.name, e.container};
        if (e.role == "textbox") {
            if (auto it = s.form_values.find(e.id); it != s.form_values.end()) r.name = it->second;
            else if (s.page_id == kResultsPage) r.name = s.search_query;
        }
        out.push_back(std::move(r));
        if (e.id == page.results_container) {
            for (PageId hit : site.search(s.search_query)) {
                out.push_back({site.result_link_ids[static_cast<size_t>(hit)], "link", site.page(hit).title, e.id});
            }
        }
    }
    return out;
}

bool is_container(const std::vector<RenderedElement>& els, NodeId id) {
    return std::any_of(els.begin(), els.end(), [&](const RenderedElement& e) { return e.container == id; }) ||
           std::any_of(els.begin(), els.end(), [&](const RenderedElement& e) { return e.id == id && e.role == "list"; });
}

std::vector<NodeId> leaf_ids(const std::vector<RenderedElement>& els) {
    std::vector<NodeId> out;
    for (const auto& e : els) {
        if (!is_container(els, e.id)) out.push_back(e.id);
    }
    return out;
}

std::vector<NodeId> visible_leaves(const EnvState& s, const std::vector<RenderedElement>& els) {
    const auto leaves = leaf_ids(els);
    const size_t lo = std::min(s.scroll_offset, leaves.size());
    const size_t hi = std::min(lo + kViewportElements, leaves.size());
    return {leaves.begin() + static_cast<std::ptrdiff_t>(lo), leaves.begin() + static_cast<std::ptrdiff_t>(hi)};
}

const PageElement* template_element(const EnvState& s, NodeId id) {
    for (const auto& e : s.site->page(s.page_id).elements) {
        if (e.id == id) return &e;
    }
    return nullptr;
}

std::optional<PageId> result_target(const EnvState& s, NodeId id) {
    if (s.page_id != kResultsPage) return std::nullopt;
    const auto& ids = s.site->result_link_ids;
    for (size_t p = 0; p < ids.size(); ++p) {
        if (ids[p] == id && id != 0) return static_cast<PageId>(p);
    }
    return std::nullopt;
}

void navigate(EnvState& s, PageId target, std::string query) {
    s.history.push_back({s.page_id, s.search_query});
    s.page_id = target;
    s.search_query = target == kResultsPage ? std::move(query) : std::string();
    s.form_values.clear();
    s.focused.reset();
    s.scroll_offset = 0;
}

std::string current_search_text(const EnvState& s) {
    for (const auto& e : s.site->page(s.page_id).elements) {
        if (!e.is_search_box) continue;
        if (auto it = s.form_values.find(e.id); it != s.form_values.end()) return it->second;
        if (s.page_id == kResultsPage) return s.search_query;
    }
    return {};
}

}  // namespace

EnvState initial_state(std::shared_ptr<const WebSite> site, PageId start_page) {
    EnvState s;
    s.site = std::move(site);
    s.page_id = start_page;
    return s;
}

AccessibilityTree observe(const EnvState& s) {
    const Page& page = s.site->page(s.page_id);
    const auto els = page_elements(s);
    const auto visible = visible_leaves(s, els);
    auto is_visible = [&](NodeId id) { return std::find(visible.begin(), visible.end(), id) != visible.end(); };

    AccessibilityTree tree;
    tree.url = page.url;
    if (s.page_id == kResultsPage && !s.search_query.empty()) tree.url += "?q=" + s.search_query;
    tree.root = AccNode{page.root_id, "root", page.title, false, {}};
    for (const auto& e : els) {
        if (e.container != 0) continue;
        AccNode node{e.id, e.role, e.name, s.focused == e.id, {}};
        if (is_container(els, e.id)) {
            for (const auto& c : els) {
                if (c.container == e.id && is_visible(c.id)) {
                    node.children.push_back(AccNode{c.id, c.role, c.name, s.focused == c.id, {}});
                }
            }
            if (node.children.empty()) continue;
        } else if (!is_visible(e.id)) {
            continue;
        }
        tree.root.children.push_back(std::move(node));
    }
    return tree;
}

StepResult step(const EnvState& state, const Action& action) {
    if (state.done) throw EpisodeDone();
    StepResult r{state, {}, std::nullopt};
    EnvState& s = r.state;
    ++s.steps;

    auto visible_target = [&](NodeId id) -> bool {
        const auto els = page_elements(state);
        const auto vis = visible_leaves(state, els);
        return std::find(vis.begin(), vis.end(), id) != vis.end();
    };

    switch (action.type) {
        case ActionType::Click: {
            if (!visible_target(action.element)) {
                r.unknown_element = action.element;
                break;
            }
            if (auto target = result_target(state, action.element)) {
                navigate(s, *target, {});
                break;
            }
            const PageElement* e = template_element(state, action.element);
            if (e->link_target) {
                navigate(s, *e->link_target, {});
            } else if (e->is_search_button) {
                navigate(s, kResultsPage, current_search_text(state));
            } else if (e->role == "textbox") {
                s.focused = e->id;
            }
            break;
        }
        case ActionType::Type: {
            const PageElement* e = visible_target(action.element) ? template_element(state, action.element) : nullptr;
            if (!e || e->role != "textbox") {
                r.unknown_element = action.element;
                break;
            }
            s.form_values[e->id] = action.content;
            s.focused = e->id;
            if (action.press_enter && e->is_search_box) navigate(s, kResultsPage, action.content);
            break;
        }
        case ActionType::ScrollDown: {
            const size_t n = leaf_ids(page_elements(state)).size();
            if (s.scroll_offset + kViewportElements < n) s.scroll_offset += kScrollStep;
            break;
        }
        case ActionType::ScrollUp:
            s.scroll_offset = s.scroll_offset >= kScrollStep ? s.scroll_offset - kScrollStep : 0;
            break;
        case ActionType::GoBack:
            if (!s.history.empty()) {
                const HistoryEntry prev = s.history.back();
                s.history.pop_back();
                s.page_id = prev.page;
                s.search_query = prev.search_query;
                s.form_values.clear();
                s.focused.reset();
                s.scroll_offset = 0;
            }
            break;
        case ActionType::Stop:
            s.done = true;
            s.answer = action.content;
            break;
    }
    r.obs = observe(s);
    return r;
}

std::shared_ptr<const WebSite> WebEnv::site(uint64_t seed, SiteKind kind, size_t n_pages, size_t branching) const {
    std::lock_guard<std::mutex> lock(mu_);
    auto key = std::make_tuple(seed, static_cast<int>(kind), n_pages, branching);
    auto it = sites_.find(key);
    if (it == sites_.end()) {
        it = sites_.emplace(key, std::make_shared<const WebSite>(generate_site(seed, kind, n_pages, branching))).first;
    }
    return it->second;
}

std::shared_ptr<const WebSite> WebEnv::site_for(const Task& task) const {
    return site(task.site_seed, task.site_kind, task.site_pages, task.site_branching);
}

std::pair<EnvState, AccessibilityTree> WebEnv::reset(const Task& task) const {
    EnvState s = initial_state(site_for(task), task.start_page);
    AccessibilityTree obs = observe(s);
    return {std::move(s), std::move(obs)};
}

StepResult WebEnv::step(const EnvState& state, const Action& action) const {
    ++live_steps_;
    return webdream::step(state, action);
}

}  // namespace webdream
