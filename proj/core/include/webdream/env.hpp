#pragma once

#include <atomic>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <stdexcept>
#include <string>
#include <tuple>
#include <vector>

#include "webdream/acctree.hpp"
#include "webdream/action.hpp"
#include "webdream/site.hpp"

namespace webdream {

/// Elements visible per scroll position.
constexpr size_t kViewportElements = 20;
/// Scroll step in elements.
constexpr size_t kScrollStep = 10;

struct HistoryEntry {
    PageId page = kHomePage;
    std::string search_query;
    bool operator==(const HistoryEntry&) const = default;
};

/// Full environment state s_t. Form values are page-local and cleared on navigation.
struct EnvState {
    std::shared_ptr<const WebSite> site;
    PageId page_id = kHomePage;
    std::vector<HistoryEntry> history;
    std::map<NodeId, std::string> form_values;
    std::string search_query;
    size_t scroll_offset = 0;
    std::optional<NodeId> focused;
    bool done = false;
    std::optional<std::string> answer;
    size_t steps = 0;

    bool operator==(const EnvState& o) const {
        return site == o.site && page_id == o.page_id && history == o.history && form_values == o.form_values &&
               search_query == o.search_query && scroll_offset == o.scroll_offset && focused == o.focused &&
               done == o.done && answer == o.answer && steps == o.steps;
    }
};

class EpisodeDone : public std::logic_error {
public:
    EpisodeDone() : std::logic_error("step called on a finished episode") {}
};

struct StepResult {
    EnvState state;
    AccessibilityTree obs;
    /// Set when the action referenced an id not visible on the current page.
    /// The step is consumed and the state is otherwise unchanged.
    std::optional<NodeId> unknown_element;
};

/// Ω: the visible accessibility tree of a state. Pure.
AccessibilityTree observe(const EnvState& state);

/// T: deterministic transition. Throws EpisodeDone if state.done.
StepResult step(const EnvState& state, const Action& action);

/// Initial state on a page of a site.
EnvState initial_state(std::shared_ptr<const WebSite> site, PageId start_page);

struct Task;

/// Site cache plus a live-step counter. Imagined rollouts must never touch it.
class WebEnv {
public:
    std::shared_ptr<const WebSite> site_for(const Task& task) const;
    std::shared_ptr<const WebSite> site(uint64_t seed, SiteKind kind, size_t n_pages, size_t branching) const;

    std::pair<EnvState, AccessibilityTree> reset(const Task& task) const;
    StepResult step(const EnvState& state, const Action& action) const;

    uint64_t live_steps() const { return live_steps_.load(); }

private:
    mutable std::mutex mu_;
    mutable std::map<std::tuple<uint64_t, int, size_t, size_t>, std::shared_ptr<const WebSite>> sites_;
    mutable std::atomic<uint64_t> live_steps_{0};
};

}  // namespace webdream
