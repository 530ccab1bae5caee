#include "webdream/action.hpp"

#include <stdexcept>

namespace webdream {

std::string_view action_type_name(ActionType t) {
    switch (t) {
        case ActionType::Click: return "click";
        case ActionType::Type: return "type";
        case ActionType::ScrollUp: return "scroll_up";
        case ActionType::ScrollDown: return "scroll_down";
        case ActionType::GoBack: return "go_back";
        case ActionType::Stop: return "stop";
    }
    return "?";
}

std::string to_command(const Action& a) {
    switch (a.type) {
        case ActionType::Click: return "click [" + std::to_string(a.element) + "]";
        case ActionType::Type:
            return "type [" + std::to_string(a.element) + "] [" + a.content + "] [" + (a.press_enter ? "1" : "0") + "]";
        case ActionType::ScrollUp: return "scroll [up]";
        case ActionType::ScrollDown: return "scroll [down]";
        case ActionType::GoBack: return "go_back";
        case ActionType::Stop: return "stop [" + a.content + "]";
    }
    return {};
}

nlohmann::json to_json(const Action& a) {
    nlohmann::json j{{"type", std::string(action_type_name(a.type))}};
    if (a.has_target()) j["id"] = a.element;
    if (a.type == ActionType::Type || a.type == ActionType::Stop) j["content"] = a.content;
    if (a.type == ActionType::Type) j["press_enter"] = a.press_enter;
    return j;
}

Action action_from_json(const nlohmann::json& j) {
    const std::string t = j.at("type").get<std::string>();
    for (ActionType at : kAllActionTypes) {
        if (t != action_type_name(at)) continue;
        Action a;
        a.type = at;
        if (a.has_target()) a.element = j.at("id").get<NodeId>();
        if (at == ActionType::Type || at == ActionType::Stop) a.content = j.at("content").get<std::string>();
        if (at == ActionType::Type) a.press_enter = j.at("press_enter").get<bool>();
        return a;
    }
    throw std::invalid_argument("unknown action type '" + t + "'");
}

}  // namespace webdream
