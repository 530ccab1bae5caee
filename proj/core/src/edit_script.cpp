#include "webdream/edit_script.hpp"

#include <functional>
#include <unordered_map>
#include <unordered_set>

namespace webdream {

using nlohmann::json;

namespace {

const char* kind_name(ApplyError::Kind k) {
    switch (k) {
        case ApplyError::Kind::DanglingId: return "DanglingId";
        case ApplyError::Kind::DuplicateId: return "DuplicateId";
        case ApplyError::Kind::BadIndex: return "BadIndex";
        case ApplyError::Kind::InvalidOp: return "InvalidOp";
    }
    return "?";
}

AccNode* find_mut(AccNode& node, NodeId id, AccNode** parent_out = nullptr, AccNode* parent = nullptr) {
    if (node.id == id) {
        if (parent_out) *parent_out = parent;
        return &node;
    }
    for (auto& c : node.children) {
        if (AccNode* hit = find_mut(c, id, parent_out, &node)) return hit;
    }
    return nullptr;
}

void collect_ids(const AccNode& node, std::vector<NodeId>& out) {
    out.push_back(node.id);
    for (const auto& c : node.children) collect_ids(c, out);
}

bool has_focus(const AccNode& node) {
    if (node.focused) return true;
    for (const auto& c : node.children) {
        if (has_focus(c)) return true;
    }
    return false;
}

void clear_focus(AccNode& node) {
    node.focused = false;
    for (auto& c : node.children) clear_focus(c);
}

AccNode strip_focus(AccNode node) {
    clear_focus(node);
    return node;
}

}  // namespace

ApplyError::ApplyError(Kind kind, size_t op_index, NodeId id, const std::string& detail)
    : std::runtime_error(std::string(kind_name(kind)) + " at op " + std::to_string(op_index) + " (id " +
                         std::to_string(id) + ")" + (detail.empty() ? "" : ": " + detail)),
      kind_(kind),
      op_index_(op_index),
      id_(id) {}

AccessibilityTree apply_script(const AccessibilityTree& tree, const EditScript& script) {
    AccessibilityTree out = tree;
    using K = ApplyError::Kind;
    for (size_t i = 0; i < script.ops.size(); ++i) {
        const EditOp& op = script.ops[i];
        if (const auto* ins = std::get_if<ops::InsertNode>(&op)) {
            AccNode* parent = find_mut(out.root, ins->parent_id);
            if (!parent) throw ApplyError(K::DanglingId, i, ins->parent_id, "insert parent");
            if (std::string err = validate_subtree(ins->subtree); !err.empty()) {
                throw ApplyError(K::InvalidOp, i, ins->subtree.id, err);
            }
            if (ins->subtree.role == "root") throw ApplyError(K::InvalidOp, i, ins->subtree.id, "root role insert");
            std::vector<NodeId> ids;
            collect_ids(ins->subtree, ids);
            for (NodeId id : ids) {
                if (out.find(id)) throw ApplyError(K::DuplicateId, i, id, "");
            }
            if (ins->index > parent->children.size()) throw ApplyError(K::BadIndex, i, ins->parent_id, "");
            if (has_focus(ins->subtree)) clear_focus(out.root);
            // find_mut result is still valid: clear_focus does not reallocate.
            parent->children.insert(parent->children.begin() + static_cast<std::ptrdiff_t>(ins->index),
                                    ins->subtree);
        } else if (const auto* rm = std::get_if<ops::RemoveNode>(&op)) {
            AccNode* parent = nullptr;
            AccNode* node = find_mut(out.root, rm->id, &parent);
            if (!node) throw ApplyError(K::DanglingId, i, rm->id, "");
            if (!parent) throw ApplyError(K::InvalidOp, i, rm->id, "cannot remove the root");
            auto& kids = parent->children;
            for (auto it = kids.begin(); it != kids.end(); ++it) {
                if (it->id == rm->id) {
                    kids.erase(it);
                    break;
                }
            }
        } else if (const auto* sn = std::get_if<ops::SetName>(&op)) {
            AccNode* node = find_mut(out.root, sn->id);
            if (!node) throw ApplyError(K::DanglingId, i, sn->id, "");
            node->name = sn->name;
        } else if (const auto* sf = std::get_if<ops::SetFocus>(&op)) {
            if (sf->id) {
                if (!out.find(*sf->id)) throw ApplyError(K::DanglingId, i, *sf->id, "");
                clear_focus(out.root);
                find_mut(out.root, *sf->id)->focused = true;
            } else {
                clear_focus(out.root);
            }
        } else if (const auto* su = std::get_if<ops::SetUrl>(&op)) {
            if (su->url.find('\n') != std::string::npos) throw ApplyError(K::InvalidOp, i, 0, "newline in url");
            out.url = su->url;
        } else if (const auto* rt = std::get_if<ops::ReplaceTree>(&op)) {
            if (rt->root.role != "root") throw ApplyError(K::InvalidOp, i, rt->root.id, "replacement is not a root");
            if (std::string err = validate_subtree(rt->root); !err.empty()) {
                throw ApplyError(K::InvalidOp, i, rt->root.id, err);
            }
            out.root = rt->root;
        } else if (std::holds_alternative<ops::MarkTerminal>(op)) {
            if (i + 1 != script.ops.size()) throw ApplyError(K::InvalidOp, i, 0, "MarkTerminal must be last");
        }
    }
    return out;
}

EditScript diff_trees(const AccessibilityTree& old_tree, const AccessibilityTree& new_tree) {
    EditScript script;
    if (old_tree.url != new_tree.url) {
        script.ops.emplace_back(ops::SetUrl{new_tree.url});
        if (!(old_tree.root == new_tree.root)) script.ops.emplace_back(ops::ReplaceTree{new_tree.root});
        return script;
    }
    if (old_tree.root.id != new_tree.root.id || old_tree.root.role != new_tree.root.role) {
        script.ops.emplace_back(ops::ReplaceTree{new_tree.root});
        return script;
    }
    std::vector<NodeId> old_ids, new_ids;
    collect_ids(old_tree.root, old_ids);
    collect_ids(new_tree.root, new_ids);
    {
        const std::unordered_set<NodeId> old_set(old_ids.begin(), old_ids.end());
        const std::unordered_set<NodeId> new_set(new_ids.begin(), new_ids.end());
        size_t common = 0;
        for (NodeId id : new_ids) common += old_set.count(id);
        const size_t uni = old_set.size() + new_set.size() - common;
        const size_t changed = uni - common;
        if (static_cast<double>(changed) > kReplaceTurnover * static_cast<double>(uni)) {
            script.ops.emplace_back(ops::ReplaceTree{new_tree.root});
            return script;
        }
    }

    // Kept nodes: same id and role, kept parent, and order-preserving among siblings.
    std::unordered_set<NodeId> kept;
    std::function<void(const AccNode&, const AccNode&)> match = [&](const AccNode& o, const AccNode& n) {
        kept.insert(n.id);
        std::unordered_map<NodeId, size_t> old_pos;
        for (size_t j = 0; j < o.children.size(); ++j) old_pos[o.children[j].id] = j;
        long last = -1;
        for (const auto& nc : n.children) {
            auto it = old_pos.find(nc.id);
            if (it == old_pos.end()) continue;
            const auto j = static_cast<long>(it->second);
            if (j <= last || o.children[it->second].role != nc.role) continue;
            last = j;
            match(o.children[it->second], nc);
        }
    };
    match(old_tree.root, new_tree.root);

    std::function<void(const AccNode&)> removals = [&](const AccNode& o) {
        for (const auto& c : o.children) {
            if (kept.count(c.id)) removals(c);
            else script.ops.emplace_back(ops::RemoveNode{c.id});
        }
    };
    removals(old_tree.root);

    std::function<void(const AccNode&)> renames = [&](const AccNode& n) {
        const AccNode* o = old_tree.find(n.id);
        if (o->name != n.name) script.ops.emplace_back(ops::SetName{n.id, n.name});
        for (const auto& c : n.children) {
            if (kept.count(c.id)) renames(c);
        }
    };
    renames(new_tree.root);

    std::function<void(const AccNode&)> inserts = [&](const AccNode& n) {
        for (size_t i = 0; i < n.children.size(); ++i) {
            const AccNode& c = n.children[i];
            if (kept.count(c.id)) inserts(c);
            else script.ops.emplace_back(ops::InsertNode{n.id, i, strip_focus(c)});
        }
    };
    inserts(new_tree.root);

    std::optional<NodeId> focus_after;
    if (auto f = old_tree.focused_id(); f && kept.count(*f)) focus_after = f;
    if (focus_after != new_tree.focused_id()) script.ops.emplace_back(ops::SetFocus{new_tree.focused_id()});
    return script;
}

EditScript canonicalize(const EditScript& script, const AccessibilityTree& tree) {
    EditScript out = diff_trees(tree, apply_script(tree, script));
    if (script.is_terminal()) out.ops.emplace_back(ops::MarkTerminal{});
    return out;
}

json node_to_json(const AccNode& node) {
    json children = json::array();
    for (const auto& c : node.children) children.push_back(node_to_json(c));
    return json{{"id", node.id}, {"role", node.role}, {"name", node.name}, {"focused", node.focused},
                {"children", std::move(children)}};
}

AccNode node_from_json(const json& j) {
    AccNode n;
    n.id = j.at("id").get<NodeId>();
    n.role = j.at("role").get<std::string>();
    n.name = j.at("name").get<std::string>();
    n.focused = j.value("focused", false);
    if (j.contains("children")) {
        for (const auto& c : j.at("children")) n.children.push_back(node_from_json(c));
    }
    return n;
}

json to_json(const EditOp& op) {
    return std::visit(
        [](const auto& o) -> json {
            using T = std::decay_t<decltype(o)>;
            if constexpr (std::is_same_v<T, ops::InsertNode>) {
                return {{"op", "InsertNode"}, {"parent_id", o.parent_id}, {"index", o.index},
                        {"subtree", node_to_json(o.subtree)}};
            } else if constexpr (std::is_same_v<T, ops::RemoveNode>) {
                return {{"op", "RemoveNode"}, {"id", o.id}};
            } else if constexpr (std::is_same_v<T, ops::SetName>) {
                return {{"op", "SetName"}, {"id", o.id}, {"name", o.name}};
            } else if constexpr (std::is_same_v<T, ops::SetFocus>) {
                return {{"op", "SetFocus"}, {"id", o.id ? json(*o.id) : json(nullptr)}};
            } else if constexpr (std::is_same_v<T, ops::SetUrl>) {
                return {{"op", "SetUrl"}, {"url", o.url}};
            } else if constexpr (std::is_same_v<T, ops::ReplaceTree>) {
                return {{"op", "ReplaceTree"}, {"root", node_to_json(o.root)}};
            } else {
                return {{"op", "MarkTerminal"}};
            }
        },
        op);
}

json to_json(const EditScript& script) {
    json arr = json::array();
    for (const auto& op : script.ops) arr.push_back(to_json(op));
    return arr;
}

EditScript script_from_json(const json& j) {
    if (!j.is_array()) throw std::invalid_argument("edit script must be a JSON array");
    EditScript s;
    for (const auto& o : j) {
        const std::string kind = o.at("op").get<std::string>();
        if (kind == "InsertNode") {
            s.ops.emplace_back(ops::InsertNode{o.at("parent_id").get<NodeId>(), o.at("index").get<size_t>(),
                                               node_from_json(o.at("subtree"))});
        } else if (kind == "RemoveNode") {
            s.ops.emplace_back(ops::RemoveNode{o.at("id").get<NodeId>()});
        } else if (kind == "SetName") {
            s.ops.emplace_back(ops::SetName{o.at("id").get<NodeId>(), o.at("name").get<std::string>()});
        } else if (kind == "SetFocus") {
            const auto& id = o.at("id");
            s.ops.emplace_back(ops::SetFocus{id.is_null() ? std::nullopt : std::optional<NodeId>(id.get<NodeId>())});
        } else if (kind == "SetUrl") {
            s.ops.emplace_back(ops::SetUrl{o.at("url").get<std::string>()});
        } else if (kind == "ReplaceTree") {
            s.ops.emplace_back(ops::ReplaceTree{node_from_json(o.at("root"))});
        } else if (kind == "MarkTerminal") {
            s.ops.emplace_back(ops::MarkTerminal{});
        } else {
            throw std::invalid_argument("unknown edit op '" + kind + "'");
        }
    }
    return s;
}

std::string script_key(const EditScript& script) { return to_json(script).dump(); }

}  // namespace webdream
