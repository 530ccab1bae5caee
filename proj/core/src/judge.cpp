#include "webdream/judge.hpp"

#include "webdream/common.hpp"
#include "webdream/task.hpp"
#include "webdream/trajectory.hpp"

namespace webdream {

bool goal_holds(const GoalPredicate& goal, const AccessibilityTree& terminal_obs, const std::string& answer) {
    if (goal.answer) {
        const auto& p = *goal.answer;
        const bool ok = p.mode == AnswerPattern::Mode::Exact ? answer == p.text
                                                             : to_lower(answer).find(to_lower(p.text)) != std::string::npos;
        if (!ok) return false;
    }
    if (goal.terminal_page && terminal_obs.url.find(*goal.terminal_page) == std::string::npos) return false;
    for (const auto& fc : goal.form) {
        const AccNode* n = terminal_obs.find(fc.element);
        if (!n || n->name != fc.value) return false;
    }
    return true;
}

int evaluate(const GoalPredicate& goal, const Trajectory& trajectory) {
    if (trajectory.steps.empty() || trajectory.truncated || !trajectory.ended_with_stop()) return 0;
    const TrajectoryStep& last = trajectory.steps.back();
    return goal_holds(goal, last.obs, last.action.content) ? 1 : 0;
}

int RuleJudge::assess(const Task& task, const Trajectory& trajectory) const { return evaluate(task.goal, trajectory); }

nlohmann::json to_json(const GoalPredicate& g) {
    nlohmann::json j = nlohmann::json::object();
    if (g.answer) {
        j["answer"] = {{"text", g.answer->text},
                       {"mode", g.answer->mode == AnswerPattern::Mode::Exact ? "exact" : "substring_ci"}};
    }
    if (g.terminal_page) j["terminal_page"] = *g.terminal_page;
    if (!g.form.empty()) {
        auto arr = nlohmann::json::array();
        for (const auto& f : g.form) arr.push_back({{"element", f.element}, {"value", f.value}});
        j["form"] = arr;
    }
    return j;
}

GoalPredicate goal_from_json(const nlohmann::json& j) {
    GoalPredicate g;
    if (j.contains("answer")) {
        const auto& a = j.at("answer");
        const std::string mode = a.value("mode", "exact");
        if (mode != "exact" && mode != "substring_ci") throw InvalidArgument("unknown answer mode '" + mode + "'");
        g.answer = AnswerPattern{a.at("text").get<std::string>(),
                                 mode == "exact" ? AnswerPattern::Mode::Exact : AnswerPattern::Mode::SubstringCI};
    }
    if (j.contains("terminal_page")) g.terminal_page = j.at("terminal_page").get<std::string>();
    if (j.contains("form")) {
        for (const auto& f : j.at("form")) g.form.push_back({f.at("element").get<NodeId>(), f.at("value").get<std::string>()});
    }
    if (!g.has_condition()) throw InvalidArgument("goal predicate has no condition");
    return g;
}

}  // namespace webdream
