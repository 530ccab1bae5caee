#pragma once

#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "webdream/acctree.hpp"

namespace webdream {

struct Trajectory;
struct Task;

struct AnswerPattern {
    enum class Mode { Exact, SubstringCI };
    std::string text;
    Mode mode = Mode::Exact;
    bool operator==(const AnswerPattern&) const = default;
};

/// Textbox `element` must show `value` in the terminal observation.
struct FormCondition {
    NodeId element = 0;
    std::string value;
    bool operator==(const FormCondition&) const = default;
};

/// Declarative task goal, decidable from the terminal observation and answer.
struct GoalPredicate {
    std::optional<AnswerPattern> answer;
    std::optional<std::string> terminal_page;  // url substring
    std::vector<FormCondition> form;

    bool operator==(const GoalPredicate&) const = default;
    bool has_condition() const { return answer || terminal_page || !form.empty(); }
};

/// True iff every present condition holds.
bool goal_holds(const GoalPredicate& goal, const AccessibilityTree& terminal_obs, const std::string& answer);

/// Binary reward: 1 iff the trajectory ended with stop and the goal holds
/// against its final observation and answer. Truncated trajectories score 0.
int evaluate(const GoalPredicate& goal, const Trajectory& trajectory);

/// Pluggable self-assessment interface; the trainer only sees this.
class Judge {
public:
    virtual ~Judge() = default;
    virtual int assess(const Task& task, const Trajectory& trajectory) const = 0;
};

class RuleJudge final : public Judge {
public:
    int assess(const Task& task, const Trajectory& trajectory) const override;
};

nlohmann::json to_json(const GoalPredicate& g);
GoalPredicate goal_from_json(const nlohmann::json& j);

}  // namespace webdream
