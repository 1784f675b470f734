#pragma once

#include <array>
#include <compare>
#include <cstdint>
#include <functional>
#include <optional>
#include <set>
#include <string>
#include <unordered_map>
#include <vector>

namespace semtree {

// Opaque node identity, stable across serialization and never reused.
struct NodeId {
    std::uint64_t value = 0;
    auto operator<=>(const NodeId&) const = default;
};

struct NodeIdHash {
    std::size_t operator()(const NodeId& id) const noexcept {
        return std::hash<std::uint64_t>{}(id.value);
    }
};

enum class NodeKind { Leaf, Internal };

struct Node {
    NodeId id;
    NodeKind kind = NodeKind::Leaf;
    std::string text;                       // textual representation of the node
    std::vector<NodeId> children;           // empty iff leaf; construction order
    std::optional<NodeId> parent;           // absent iff root
    std::optional<std::string> doc_id;      // present iff leaf
    // Five-level document summaries, most abstract first. Present on leaves
    // produced by the divisive builder.
    std::optional<std::array<std::string, 5>> summary_levels;

    bool is_leaf() const { return kind == NodeKind::Leaf; }
};

// Corpus hierarchy: leaves are documents, internal nodes carry generated
// summaries. Immutable after construction; concurrent reads are safe.
struct SemanticTree {
    std::unordered_map<NodeId, Node, NodeIdHash> nodes;
    NodeId root;
    int max_branching = 16;

    bool contains(NodeId id) const { return nodes.count(id) > 0; }

    const Node& node(NodeId id) const;

    std::size_t leaf_count() const;
};

// Incremental construction helper; ids are assigned monotonically.
class TreeBuilder {
public:
    NodeId add_leaf(std::string doc_id, std::string content);
    NodeId add_internal(const std::vector<NodeId>& children, std::string summary);
    void set_text(NodeId id, std::string text);
    void set_summary_levels(NodeId id, std::array<std::string, 5> levels);
    void reassign_children(NodeId parent, const std::vector<NodeId>& children);

    const Node& node(NodeId id) const { return tree_.nodes.at(id); }
    std::size_t node_count() const { return tree_.nodes.size(); }

    // Marks `root` as the tree root and returns the finished tree.
    SemanticTree finish(NodeId root, int max_branching) &&;

private:
    SemanticTree tree_;
    std::uint64_t next_id_ = 0;
};

// Structural audit. Violations are data, not faults; an empty result means
// every invariant holds. When `corpus_doc_ids` is given, the leaf set is also
// checked against it bijectively.
std::vector<std::string> validate_tree(const SemanticTree& tree);
std::vector<std::string> validate_tree(const SemanticTree& tree,
                                       const std::vector<std::string>& corpus_doc_ids);

// Exactly the leaves reachable from v; {v} when v is a leaf.
std::set<NodeId> leaf_descendants(const SemanticTree& tree, NodeId v);

// [v, parent(v), ..., root]
std::vector<NodeId> path_to_root(const SemanticTree& tree, NodeId v);

int tree_depth(const SemanticTree& tree);

// One header object followed by one object per node, parents before children.
std::string serialize_tree(const SemanticTree& tree);
SemanticTree deserialize_tree(const std::string& bytes);

void save_tree(const SemanticTree& tree, const std::string& path);
SemanticTree load_tree(const std::string& path);

}  // namespace semtree
