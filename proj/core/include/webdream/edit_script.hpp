#pragma once

#include <optional>
#include <stdexcept>
#include <string>
#include <variant>
#include <vector>

#include <json.hpp>

#include "webdream/acctree.hpp"

namespace webdream {

namespace ops {
struct InsertNode {
    NodeId parent_id = 0;
    size_t index = 0;
    AccNode subtree;
    bool operator==(const InsertNode&) const = default;
};
struct RemoveNode {
    NodeId id = 0;
    bool operator==(const RemoveNode&) const = default;
};
struct SetName {
    NodeId id = 0;
    std::string name;
    bool operator==(const SetName&) const = default;
};
struct SetFocus {
    std::optional<NodeId> id;  // nullopt clears focus
    bool operator==(const SetFocus&) const = default;
};
struct SetUrl {
    std::string url;
    bool operator==(const SetUrl&) const = default;
};
struct ReplaceTree {
    AccNode root;
    bool operator==(const ReplaceTree&) const = default;
};
struct MarkTerminal {
    bool operator==(const MarkTerminal&) const = default;
};
}  // namespace ops

using EditOp = std::variant<ops::InsertNode, ops::RemoveNode, ops::SetName, ops::SetFocus, ops::SetUrl,
                            ops::ReplaceTree, ops::MarkTerminal>;

/// An ordered list of edits turning one observation into the next.
struct EditScript {
    std::vector<EditOp> ops;

    bool operator==(const EditScript&) const = default;
    bool empty() const { return ops.empty(); }
    size_t size() const { return ops.size(); }
    bool is_terminal() const {
        return !ops.empty() && std::holds_alternative<ops::MarkTerminal>(ops.back());
    }
};

class ApplyError : public std::runtime_error {
public:
    enum class Kind { DanglingId, DuplicateId, BadIndex, InvalidOp };
    ApplyError(Kind kind, size_t op_index, NodeId id, const std::string& detail);
    Kind kind() const { return kind_; }
    size_t op_index() const { return op_index_; }
    NodeId id() const { return id_; }

private:
    Kind kind_;
    size_t op_index_;
    NodeId id_;
};

/// Applies ops left to right to a copy of the tree. Throws ApplyError.
AccessibilityTree apply_script(const AccessibilityTree& tree, const EditScript& script);

/// Fraction of ids above which diff emits a whole-tree replacement.
constexpr double kReplaceTurnover = 0.5;

/// Id-matched diff: apply_script(old, diff_trees(old, new)) == new, and equal
/// trees give an empty script. Op order: removals, renames, insertions, focus.
EditScript diff_trees(const AccessibilityTree& old_tree, const AccessibilityTree& new_tree);

/// diff_trees(tree, apply_script(tree, script)), keeping a trailing MarkTerminal.
EditScript canonicalize(const EditScript& script, const AccessibilityTree& tree);

nlohmann::json to_json(const EditOp& op);
nlohmann::json to_json(const EditScript& script);
nlohmann::json node_to_json(const AccNode& node);
AccNode node_from_json(const nlohmann::json& j);
EditScript script_from_json(const nlohmann::json& j);
/// Compact JSON text; equal scripts give equal strings.
std::string script_key(const EditScript& script);

}  // namespace webdream
