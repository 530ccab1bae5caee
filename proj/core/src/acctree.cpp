#include "webdream/acctree.hpp"

#include <algorithm>
#include <charconv>
#include <functional>
#include <unordered_set>

namespace webdream {

const std::vector<std::string>& known_roles() {
    static const std::vector<std::string> roles = {
        "root", "link", "button", "textbox", "text", "heading", "list", "listitem", "img", "navigation",
    };
    return roles;
}

bool is_known_role(std::string_view role) {
    const auto& roles = known_roles();
    return std::find(roles.begin(), roles.end(), role) != roles.end();
}

bool is_interactable_role(std::string_view role) {
    return role == "link" || role == "button" || role == "textbox";
}

ParseError::ParseError(size_t line, std::string reason)
    : std::runtime_error("line " + std::to_string(line) + ": " + reason), line_(line), reason_(std::move(reason)) {}

size_t AccessibilityTree::node_count() const {
    size_t n = 0;
    std::function<void(const AccNode&)> walk = [&](const AccNode& node) {
        ++n;
        for (const auto& c : node.children) walk(c);
    };
    walk(root);
    return n;
}

const AccNode* AccessibilityTree::find(NodeId id) const {
    std::function<const AccNode*(const AccNode&)> walk = [&](const AccNode& node) -> const AccNode* {
        if (node.id == id) return &node;
        for (const auto& c : node.children) {
            if (const AccNode* hit = walk(c)) return hit;
        }
        return nullptr;
    };
    return walk(root);
}

std::optional<NodeId> AccessibilityTree::focused_id() const {
    for (const AccNode* n : preorder()) {
        if (n->focused) return n->id;
    }
    return std::nullopt;
}

std::vector<const AccNode*> AccessibilityTree::preorder() const {
    std::vector<const AccNode*> out;
    std::function<void(const AccNode&)> walk = [&](const AccNode& node) {
        out.push_back(&node);
        for (const auto& c : node.children) walk(c);
    };
    walk(root);
    return out;
}

namespace {

struct ParsedLine {
    size_t depth;
    AccNode node;
};

std::string escape_name(std::string_view name) {
    std::string out;
    out.reserve(name.size());
    for (char c : name) {
        switch (c) {
            case '\\': out += "\\\\"; break;
            case '\'': out += "\\'"; break;
            case '\n': out += "\\n"; break;
            default: out.push_back(c);
        }
    }
    return out;
}

ParsedLine parse_node_line(std::string_view line, size_t lineno) {
    size_t spaces = 0;
    while (spaces < line.size() && (line[spaces] == ' ' || line[spaces] == '\t')) {
        if (line[spaces] == '\t') throw ParseError(lineno, "tab in indentation");
        ++spaces;
    }
    if (spaces % 2 != 0) throw ParseError(lineno, "indentation is not a multiple of 2");
    ParsedLine out{spaces / 2, {}};
    std::string_view rest = line.substr(spaces);

    const size_t sp = rest.find(' ');
    if (sp == std::string_view::npos || sp == 0) throw ParseError(lineno, "malformed node line");
    out.node.role = std::string(rest.substr(0, sp));
    if (!is_known_role(out.node.role)) throw ParseError(lineno, "unknown role '" + out.node.role + "'");
    rest.remove_prefix(sp + 1);

    if (rest.empty() || rest.front() != '[') throw ParseError(lineno, "expected '[id]'");
    const size_t close = rest.find(']');
    if (close == std::string_view::npos) throw ParseError(lineno, "expected '[id]'");
    const std::string_view digits = rest.substr(1, close - 1);
    NodeId id = 0;
    auto [ptr, ec] = std::from_chars(digits.data(), digits.data() + digits.size(), id);
    if (ec != std::errc() || ptr != digits.data() + digits.size() || digits.empty() || digits.front() == '0' ||
        id <= 0) {
        throw ParseError(lineno, "invalid id '" + std::string(digits) + "'");
    }
    out.node.id = id;
    rest.remove_prefix(close + 1);

    // The name may be omitted; canonical text always writes it.
    if (rest.empty()) return out;
    if (rest == " focused: True") {
        out.node.focused = true;
        return out;
    }
    if (rest.size() < 3 || rest[0] != ' ' || rest[1] != '\'') throw ParseError(lineno, "expected quoted name");
    rest.remove_prefix(2);
    std::string name;
    bool closed = false;
    size_t i = 0;
    for (; i < rest.size(); ++i) {
        const char c = rest[i];
        if (c == '\\') {
            if (i + 1 >= rest.size()) throw ParseError(lineno, "dangling escape");
            const char e = rest[++i];
            if (e == '\\') name.push_back('\\');
            else if (e == '\'') name.push_back('\'');
            else if (e == 'n') name.push_back('\n');
            else throw ParseError(lineno, "unknown escape");
        } else if (c == '\'') {
            closed = true;
            ++i;
            break;
        } else {
            name.push_back(c);
        }
    }
    if (!closed) throw ParseError(lineno, "unterminated name");
    out.node.name = std::move(name);
    rest.remove_prefix(i);
    if (rest == " focused: True") {
        out.node.focused = true;
    } else if (!rest.empty()) {
        throw ParseError(lineno, "trailing characters");
    }
    return out;
}

void serialize_node(const AccNode& node, size_t depth, std::string& out) {
    out += '\n';
    out.append(depth * 2, ' ');
    out += node.role;
    out += " [";
    out += std::to_string(node.id);
    out += "] '";
    out += escape_name(node.name);
    out += '\'';
    if (node.focused) out += " focused: True";
    for (const auto& c : node.children) serialize_node(c, depth + 1, out);
}

}  // namespace

AccessibilityTree parse_tree(std::string_view text) {
    if (!text.empty() && text.back() == '\n') text.remove_suffix(1);
    std::vector<std::string_view> lines;
    size_t start = 0;
    while (start <= text.size()) {
        const size_t nl = text.find('\n', start);
        if (nl == std::string_view::npos) {
            lines.push_back(text.substr(start));
            break;
        }
        lines.push_back(text.substr(start, nl - start));
        start = nl + 1;
    }
    if (lines.empty() || lines[0].rfind("url: ", 0) != 0) throw ParseError(1, "missing url header");

    AccessibilityTree tree;
    tree.url = std::string(lines[0].substr(5));
    if (lines.size() < 2) throw ParseError(2, "missing root node");

    std::vector<ParsedLine> parsed;
    std::unordered_set<NodeId> seen;
    bool have_focus = false;
    for (size_t i = 1; i < lines.size(); ++i) {
        const size_t lineno = i + 1;
        ParsedLine pl = parse_node_line(lines[i], lineno);
        if (i == 1) {
            if (pl.depth != 0) throw ParseError(lineno, "bad indentation jump");
            if (pl.node.role != "root") throw ParseError(lineno, "first node must have role root");
        } else {
            if (pl.depth == 0) throw ParseError(lineno, "multiple top-level nodes");
            if (pl.depth > parsed.back().depth + 1) throw ParseError(lineno, "bad indentation jump");
            if (pl.node.role == "root") throw ParseError(lineno, "root role below top level");
        }
        if (!seen.insert(pl.node.id).second) {
            throw ParseError(lineno, "duplicate id " + std::to_string(pl.node.id));
        }
        if (pl.node.focused) {
            if (have_focus) throw ParseError(lineno, "multiple focused nodes");
            have_focus = true;
        }
        parsed.push_back(std::move(pl));
    }

    // Rebuild nesting from depths; parsed[0] is the root.
    size_t pos = 0;
    std::function<AccNode()> build = [&]() -> AccNode {
        AccNode node = std::move(parsed[pos].node);
        const size_t depth = parsed[pos].depth;
        ++pos;
        while (pos < parsed.size() && parsed[pos].depth == depth + 1) node.children.push_back(build());
        return node;
    };
    tree.root = build();
    return tree;
}

std::string serialize_tree(const AccessibilityTree& tree) {
    std::string out = "url: " + tree.url;
    serialize_node(tree.root, 0, out);
    return out;
}

std::string validate_subtree(const AccNode& node) {
    std::unordered_set<NodeId> ids;
    int focus = 0;
    std::string err;
    std::function<void(const AccNode&, bool)> walk = [&](const AccNode& n, bool top) {
        if (!err.empty()) return;
        if (n.id <= 0) err = "non-positive id " + std::to_string(n.id);
        else if (!is_known_role(n.role)) err = "unknown role '" + n.role + "'";
        else if (!top && n.role == "root") err = "root role below top level";
        else if (!ids.insert(n.id).second) err = "duplicate id " + std::to_string(n.id);
        else if (n.focused && ++focus > 1) err = "multiple focused nodes";
        for (const auto& c : n.children) walk(c, false);
    };
    walk(node, true);
    return err;
}

std::string validate_tree(const AccessibilityTree& tree) {
    if (tree.root.role != "root") return "top-level node must have role root";
    if (tree.url.find('\n') != std::string::npos) return "url contains a newline";
    return validate_subtree(tree.root);
}

}  // namespace webdream
