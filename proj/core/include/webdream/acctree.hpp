#pragma once

#include <cstdint>
#include <optional>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

namespace webdream {

using NodeId = int64_t;

/// Fixed role registry. Parsing rejects anything else.
const std::vector<std::string>& known_roles();
bool is_known_role(std::string_view role);
/// Roles the agent can target with click/type.
bool is_interactable_role(std::string_view role);

struct AccNode {
    NodeId id = 0;
    std::string role;
    std::string name;
    bool focused = false;
    std::vector<AccNode> children;

    bool operator==(const AccNode&) const = default;
};

/// A rooted accessibility tree plus the page url. The root node has role "root".
struct AccessibilityTree {
    AccNode root;
    std::string url;

    bool operator==(const AccessibilityTree&) const = default;

    size_t node_count() const;
    const AccNode* find(NodeId id) const;
    /// Id of the focused node, if any.
    std::optional<NodeId> focused_id() const;
    /// Every node in preorder.
    std::vector<const AccNode*> preorder() const;
};

class ParseError : public std::runtime_error {
public:
    ParseError(size_t line, std::string reason);
    size_t line() const { return line_; }
    const std::string& reason() const { return reason_; }

private:
    size_t line_;
    std::string reason_;
};

/// Parses canonical tree text:
///
///     url: http://a
///     root [1] ''
///       link [2] 'Home'
///       textbox [3] 'laptop' focused: True
///
/// Names are single-quoted with `\\`, `\'` and `\n` escapes; an omitted name is
/// empty. A single trailing newline is accepted. Throws ParseError.
AccessibilityTree parse_tree(std::string_view text);

/// Canonical text of a tree; parse_tree(serialize_tree(t)) == t.
std::string serialize_tree(const AccessibilityTree& tree);

/// Checks id uniqueness, single focus, known roles and the root role.
/// Returns an empty string when valid, otherwise the first violation.
std::string validate_tree(const AccessibilityTree& tree);
std::string validate_subtree(const AccNode& node);

}  // namespace webdream
