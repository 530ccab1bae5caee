#pragma once

#include <array>
#include <string>
#include <string_view>

#include <json.hpp>

#include "webdream/acctree.hpp"

namespace webdream {

enum class ActionType { Click = 0, Type = 1, ScrollUp = 2, ScrollDown = 3, GoBack = 4, Stop = 5 };

constexpr size_t kNumActionTypes = 6;
constexpr std::array<ActionType, kNumActionTypes> kAllActionTypes = {
    ActionType::Click, ActionType::Type, ActionType::ScrollUp, ActionType::ScrollDown, ActionType::GoBack,
    ActionType::Stop};

/// One agent action. `element` is meaningful for Click/Type, `content` for
/// Type/Stop, `press_enter` for Type only.
struct Action {
    ActionType type = ActionType::Stop;
    NodeId element = 0;
    std::string content;
    bool press_enter = false;

    bool operator==(const Action&) const = default;

    static Action click(NodeId id) { return {ActionType::Click, id, {}, false}; }
    static Action type_text(NodeId id, std::string text, bool enter) {
        return {ActionType::Type, id, std::move(text), enter};
    }
    static Action scroll_up() { return {ActionType::ScrollUp, 0, {}, false}; }
    static Action scroll_down() { return {ActionType::ScrollDown, 0, {}, false}; }
    static Action go_back() { return {ActionType::GoBack, 0, {}, false}; }
    static Action stop(std::string answer) { return {ActionType::Stop, 0, std::move(answer), false}; }

    bool has_target() const { return type == ActionType::Click || type == ActionType::Type; }
};

std::string_view action_type_name(ActionType t);

/// Command form: `click [7]`, `type [15] [laptop] [1]`, `scroll [down]`,
/// `go_back`, `stop [5h 47min]`.
std::string to_command(const Action& a);

nlohmann::json to_json(const Action& a);
Action action_from_json(const nlohmann::json& j);

}  // namespace webdream
