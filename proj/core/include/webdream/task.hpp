#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "webdream/action.hpp"
#include "webdream/judge.hpp"
#include "webdream/site.hpp"

namespace webdream {

/// Fixed system instructions shared by every task.
extern const char* const kInstructions;

struct Task {
    std::string task_id;
    std::string query;
    uint64_t site_seed = 0;
    SiteKind site_kind = SiteKind::Shop;
    size_t site_pages = 20;
    size_t site_branching = 3;
    PageId start_page = kHomePage;
    GoalPredicate goal;
    std::string instructions = kInstructions;
    /// Closed content vocabulary for type/stop.
    std::vector<std::string> vocab;

    bool operator==(const Task&) const = default;
};

struct TaskGenOptions {
    size_t n_pages = 20;
    size_t branching = 3;
    size_t tasks_per_site = 10;
    size_t max_witness_steps = 10;
};

struct GeneratedTask {
    Task task;
    std::vector<Action> witness;
};

/// Deterministic. Each task targets an item page and carries a shortest
/// witness action sequence (ending in stop) found by breadth-first search.
/// Throws InvalidArgument when n == 0, kinds is empty, or a site has no items.
std::vector<GeneratedTask> generate_tasks(uint64_t seed, size_t n, const std::vector<SiteKind>& kinds,
                                          const TaskGenOptions& options = {});

/// Shortest action sequence from the task's start page to a judged success.
std::optional<std::vector<Action>> find_witness(const WebSite& site, const Task& task, size_t max_steps);

nlohmann::json to_json(const Task& t);
Task task_from_json(const nlohmann::json& j);
/// {"task": ..., "witness": [actions]}
nlohmann::json to_json(const GeneratedTask& t);
GeneratedTask generated_task_from_json(const nlohmann::json& j);

}  // namespace webdream
