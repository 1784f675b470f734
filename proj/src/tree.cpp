#include "semtree/tree.hpp"

#include <json.hpp>

#include <deque>
#include <fstream>
#include <sstream>
#include <stdexcept>
#include <unordered_set>

#include "semtree/util.hpp"

namespace semtree {

using nlohmann::json;

const Node& SemanticTree::node(NodeId id) const {
    auto it = nodes.find(id);
    if (it == nodes.end()) {
        throw std::out_of_range("unknown node id " + std::to_string(id.value));
    }
    return it->second;
}

std::size_t SemanticTree::leaf_count() const {
    std::size_t n = 0;
    for (const auto& [id, node] : nodes) {
        if (node.is_leaf()) ++n;
    }
    return n;
}

NodeId TreeBuilder::add_leaf(std::string doc_id, std::string content) {
    NodeId id{next_id_++};
    Node n;
    n.id = id;
    n.kind = NodeKind::Leaf;
    n.text = std::move(content);
    n.doc_id = std::move(doc_id);
    tree_.nodes.emplace(id, std::move(n));
    return id;
}

NodeId TreeBuilder::add_internal(const std::vector<NodeId>& children, std::string summary) {
    NodeId id{next_id_++};
    Node n;
    n.id = id;
    n.kind = NodeKind::Internal;
    n.text = std::move(summary);
    n.children = children;
    for (NodeId c : children) {
        tree_.nodes.at(c).parent = id;
    }
    tree_.nodes.emplace(id, std::move(n));
    return id;
}

void TreeBuilder::set_text(NodeId id, std::string text) {
    tree_.nodes.at(id).text = std::move(text);
}

void TreeBuilder::set_summary_levels(NodeId id, std::array<std::string, 5> levels) {
    tree_.nodes.at(id).summary_levels = std::move(levels);
}

void TreeBuilder::reassign_children(NodeId parent, const std::vector<NodeId>& children) {
    Node& p = tree_.nodes.at(parent);
    for (NodeId old_child : p.children) {
        tree_.nodes.at(old_child).parent.reset();
    }
    p.children = children;
    for (NodeId c : children) {
        tree_.nodes.at(c).parent = parent;
    }
}

SemanticTree TreeBuilder::finish(NodeId root, int max_branching) && {
    tree_.root = root;
    tree_.max_branching = max_branching;
    tree_.nodes.at(root).parent.reset();
    return std::move(tree_);
}

std::vector<std::string> validate_tree(const SemanticTree& tree) {
    std::vector<std::string> violations;
    auto flag = [&](NodeId id, const std::string& what) {
        violations.push_back("node " + std::to_string(id.value) + ": " + what);
    };

    if (!tree.contains(tree.root)) {
        violations.push_back("root id " + std::to_string(tree.root.value) + " not present");
        return violations;
    }
    if (tree.max_branching < 2) {
        violations.push_back("max_branching must be >= 2, got " +
                             std::to_string(tree.max_branching));
    }

    std::unordered_map<NodeId, NodeId, NodeIdHash> claimed_by;  // child -> parent
    std::unordered_set<std::string> seen_doc_ids;

    for (const auto& [id, node] : tree.nodes) {
        if (node.id != id) flag(id, "stored id mismatch");

        const bool leaf = node.kind == NodeKind::Leaf;
        if (leaf != node.children.empty()) {
            flag(id, leaf ? "leaf with children" : "internal node without children");
        }
        if (leaf != node.doc_id.has_value()) {
            flag(id, leaf ? "leaf missing doc_id" : "internal node carries doc_id");
        }
        if (leaf && node.doc_id) {
            if (!seen_doc_ids.insert(*node.doc_id).second) {
                flag(id, "duplicate doc_id '" + *node.doc_id + "'");
            }
        }
        if (!leaf && node.text.empty() && id != tree.root) {
            flag(id, "internal non-root node with empty summary");
        }
        if (static_cast<int>(node.children.size()) > tree.max_branching) {
            flag(id, "branching exceeded: " + std::to_string(node.children.size()) +
                         " children > M=" + std::to_string(tree.max_branching));
        }
        if (node.summary_levels && node.summary_levels->size() != 5) {
            flag(id, "summary_levels must have exactly 5 entries");
        }

        std::unordered_set<std::uint64_t> child_set;
        for (NodeId c : node.children) {
            if (!child_set.insert(c.value).second) {
                flag(id, "duplicate child " + std::to_string(c.value));
                continue;
            }
            if (!tree.contains(c)) {
                flag(id, "references unknown child " + std::to_string(c.value));
                continue;
            }
            auto [it, fresh] = claimed_by.emplace(c, id);
            if (!fresh) {
                flag(c, "multiple parents: claimed by " + std::to_string(it->second.value) +
                            " and " + std::to_string(id.value));
            }
            const Node& child = tree.nodes.at(c);
            if (!child.parent || *child.parent != id) {
                flag(c, "parent link inconsistent with child list of " +
                            std::to_string(id.value));
            }
        }
    }

    // Root / orphan / reachability checks.
    std::size_t roots = 0;
    for (const auto& [id, node] : tree.nodes) {
        if (!node.parent) {
            ++roots;
            if (id != tree.root) flag(id, "parentless node is not the declared root");
        } else if (!tree.contains(*node.parent)) {
            flag(id, "references unknown parent " + std::to_string(node.parent->value));
        }
    }
    if (roots != 1) {
        violations.push_back("expected exactly one root, found " + std::to_string(roots));
    }

    std::unordered_set<std::uint64_t> reached;
    std::deque<NodeId> queue{tree.root};
    reached.insert(tree.root.value);
    while (!queue.empty()) {
        NodeId cur = queue.front();
        queue.pop_front();
        auto it = tree.nodes.find(cur);
        if (it == tree.nodes.end()) continue;
        for (NodeId c : it->second.children) {
            if (reached.insert(c.value).second) queue.push_back(c);
        }
    }
    for (const auto& [id, node] : tree.nodes) {
        if (!reached.count(id.value)) {
            flag(id, "unreachable from root");
        }
    }

    return violations;
}

std::vector<std::string> validate_tree(const SemanticTree& tree,
                                       const std::vector<std::string>& corpus_doc_ids) {
    auto violations = validate_tree(tree);
    std::unordered_set<std::string> expected(corpus_doc_ids.begin(), corpus_doc_ids.end());
    std::unordered_set<std::string> found;
    for (const auto& [id, node] : tree.nodes) {
        if (!node.is_leaf() || !node.doc_id) continue;
        found.insert(*node.doc_id);
        if (!expected.count(*node.doc_id)) {
            violations.push_back("node " + std::to_string(id.value) + ": leaf doc_id '" +
                                 *node.doc_id + "' not in corpus");
        }
    }
    for (const auto& doc : expected) {
        if (!found.count(doc)) {
            violations.push_back("corpus document '" + doc + "' missing from tree leaves");
        }
    }
    return violations;
}

std::set<NodeId> leaf_descendants(const SemanticTree& tree, NodeId v) {
    const Node& start = tree.node(v);
    std::set<NodeId> leaves;
    if (start.is_leaf()) {
        leaves.insert(v);
        return leaves;
    }
    std::deque<NodeId> queue{v};
    while (!queue.empty()) {
        NodeId cur = queue.front();
        queue.pop_front();
        const Node& n = tree.node(cur);
        if (n.is_leaf()) {
            leaves.insert(cur);
        } else {
            for (NodeId c : n.children) queue.push_back(c);
        }
    }
    return leaves;
}

std::vector<NodeId> path_to_root(const SemanticTree& tree, NodeId v) {
    std::vector<NodeId> path;
    NodeId cur = v;
    path.push_back(tree.node(cur).id);
    while (tree.node(cur).parent) {
        cur = *tree.node(cur).parent;
        path.push_back(cur);
        if (path.size() > tree.nodes.size()) {
            throw std::runtime_error("parent cycle detected at node " +
                                     std::to_string(cur.value));
        }
    }
    return path;
}

int tree_depth(const SemanticTree& tree) {
    int depth = 0;
    std::deque<std::pair<NodeId, int>> queue{{tree.root, 0}};
    while (!queue.empty()) {
        auto [cur, d] = queue.front();
        queue.pop_front();
        depth = std::max(depth, d);
        for (NodeId c : tree.node(cur).children) queue.push_back({c, d + 1});
    }
    return depth;
}

namespace {

json node_to_json(const Node& n) {
    json j;
    j["id"] = n.id.value;
    j["kind"] = n.is_leaf() ? "leaf" : "internal";
    j["text"] = n.text;
    if (!n.children.empty()) {
        json arr = json::array();
        for (NodeId c : n.children) arr.push_back(c.value);
        j["children"] = std::move(arr);
    }
    if (n.doc_id) j["doc_id"] = *n.doc_id;
    if (n.summary_levels) {
        json arr = json::array();
        for (const auto& s : *n.summary_levels) arr.push_back(s);
        j["summary_levels"] = std::move(arr);
    }
    return j;
}

[[noreturn]] void parse_fail(std::size_t byte_offset, std::size_t line_no,
                             const std::string& what) {
    throw std::runtime_error("tree parse error at byte " + std::to_string(byte_offset) +
                             " (line " + std::to_string(line_no) + "): " + what);
}

}  // namespace

std::string serialize_tree(const SemanticTree& tree) {
    json header;
    header["format"] = "semtree-v1";
    header["max_branching"] = tree.max_branching;
    header["root"] = tree.root.value;
    header["nodes"] = tree.nodes.size();

    std::string out = header.dump();
    out.push_back('\n');

    // Breadth-first from the root: parents always precede children.
    std::deque<NodeId> queue{tree.root};
    std::size_t emitted = 0;
    while (!queue.empty()) {
        NodeId cur = queue.front();
        queue.pop_front();
        const Node& n = tree.node(cur);
        out += node_to_json(n).dump();
        out.push_back('\n');
        ++emitted;
        for (NodeId c : n.children) queue.push_back(c);
    }
    if (emitted != tree.nodes.size()) {
        throw std::runtime_error("serialize_tree: tree has unreachable nodes; validate first");
    }
    return out;
}

SemanticTree deserialize_tree(const std::string& bytes) {
    SemanticTree tree;
    std::size_t offset = 0;
    std::size_t line_no = 0;
    bool header_seen = false;
    std::size_t declared_nodes = 0;

    while (offset < bytes.size()) {
        std::size_t line_start = offset;
        std::size_t eol = bytes.find('\n', offset);
        std::string line = bytes.substr(offset, eol == std::string::npos ? std::string::npos
                                                                         : eol - offset);
        offset = eol == std::string::npos ? bytes.size() : eol + 1;
        ++line_no;
        if (line.empty()) continue;

        json j = json::parse(line, nullptr, false);
        if (j.is_discarded()) parse_fail(line_start, line_no, "malformed JSON");

        if (!header_seen) {
            if (!j.contains("format") || j["format"] != "semtree-v1") {
                parse_fail(line_start, line_no, "missing or unsupported format header");
            }
            if (!j.contains("root") || !j.contains("max_branching")) {
                parse_fail(line_start, line_no, "header missing root/max_branching");
            }
            tree.root = NodeId{j["root"].get<std::uint64_t>()};
            tree.max_branching = j["max_branching"].get<int>();
            declared_nodes = j.value("nodes", 0u);
            header_seen = true;
            continue;
        }

        if (!j.contains("id") || !j.contains("kind")) {
            parse_fail(line_start, line_no, "node record missing id/kind");
        }
        Node n;
        n.id = NodeId{j["id"].get<std::uint64_t>()};
        const std::string kind = j["kind"].get<std::string>();
        if (kind == "leaf") {
            n.kind = NodeKind::Leaf;
        } else if (kind == "internal") {
            n.kind = NodeKind::Internal;
        } else {
            parse_fail(line_start, line_no, "unknown node kind '" + kind + "'");
        }
        n.text = j.value("text", std::string{});
        if (j.contains("children")) {
            for (const auto& c : j["children"]) {
                n.children.push_back(NodeId{c.get<std::uint64_t>()});
            }
        }
        if (j.contains("doc_id")) n.doc_id = j["doc_id"].get<std::string>();
        if (j.contains("summary_levels")) {
            const auto& arr = j["summary_levels"];
            if (!arr.is_array() || arr.size() != 5) {
                parse_fail(line_start, line_no, "summary_levels must be an array of 5 strings");
            }
            std::array<std::string, 5> levels;
            for (std::size_t i = 0; i < 5; ++i) levels[i] = arr[i].get<std::string>();
            n.summary_levels = std::move(levels);
        }
        if (tree.nodes.count(n.id)) {
            parse_fail(line_start, line_no,
                       "duplicate node id " + std::to_string(n.id.value));
        }
        tree.nodes.emplace(n.id, std::move(n));
    }

    if (!header_seen) throw std::runtime_error("tree parse error at byte 0 (line 1): empty input");
    if (declared_nodes != 0 && declared_nodes != tree.nodes.size()) {
        throw std::runtime_error("tree parse error: header declares " +
                                 std::to_string(declared_nodes) + " nodes, found " +
                                 std::to_string(tree.nodes.size()));
    }

    // Rebuild parent links from child lists.
    for (auto& [id, node] : tree.nodes) {
        for (NodeId c : node.children) {
            auto it = tree.nodes.find(c);
            if (it == tree.nodes.end()) {
                throw std::runtime_error("tree parse error: node " + std::to_string(id.value) +
                                         " references unknown child " + std::to_string(c.value));
            }
            it->second.parent = id;
        }
    }
    if (!tree.contains(tree.root)) {
        throw std::runtime_error("tree parse error: declared root not present");
    }
    return tree;
}

void save_tree(const SemanticTree& tree, const std::string& path) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw std::runtime_error("cannot open for writing: " + path);
    out << serialize_tree(tree);
}

SemanticTree load_tree(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw std::runtime_error("cannot open tree file: " + path);
    std::ostringstream buf;
    buf << in.rdbuf();
    return deserialize_tree(buf.str());
}

}  // namespace semtree
