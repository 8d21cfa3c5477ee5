#pragma once

#include "reasongraph/diagnostic.hpp"

#include <array>
#include <cstddef>
#include <optional>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

namespace reasongraph {

enum class ReasoningMethod {
    chain_of_thoughts,
    self_refine,
    least_to_most,
    self_consistency,
    tree_of_thoughts,
    beam_search,
};

inline constexpr std::array<ReasoningMethod, 6> all_methods = {
    ReasoningMethod::chain_of_thoughts, ReasoningMethod::self_refine,
    ReasoningMethod::least_to_most,     ReasoningMethod::self_consistency,
    ReasoningMethod::tree_of_thoughts,  ReasoningMethod::beam_search,
};

std::string_view to_string(ReasoningMethod method) noexcept;
std::string_view display_name(ReasoningMethod method) noexcept;
/// Exact canonical name lookup. Anything else, including different case, is rejected.
std::optional<ReasoningMethod> method_from_string(std::string_view name) noexcept;
bool is_tree_method(ReasoningMethod method) noexcept;

enum class NodeKind {
    question,
    step,
    attempt,
    reflection,
    improvement,
    sub_question,
    sub_answer,
    candidate,
    final_answer,
};

std::string_view to_string(NodeKind kind) noexcept;
std::optional<NodeKind> node_kind_from_string(std::string_view name) noexcept;

using NodeId = std::string;

struct TraceNode {
    NodeId id;
    NodeKind kind = NodeKind::step;
    std::string label;
    std::optional<double> score;
    std::optional<int> level;
    std::optional<int> chain_index;
};

struct TraceEdge {
    NodeId from;
    NodeId to;
    bool on_selected_path = false;
};

/// Canonical reasoning graph. Immutable once constructed, so a single value can
/// be shared between threads freely.
///
/// Construction never rejects a structurally broken graph: the JSON loader and
/// tests need to represent invalid input so that validate_trace can report on
/// it. Adjacency only includes edges whose endpoints both exist.
class ReasoningTrace {
public:
    ReasoningTrace(ReasoningMethod method, std::vector<TraceNode> nodes,
                   std::vector<TraceEdge> edges,
                   std::optional<std::vector<NodeId>> selected_path = std::nullopt);

    ReasoningMethod method() const noexcept { return method_; }
    const std::vector<TraceNode>& nodes() const noexcept { return nodes_; }
    const std::vector<TraceEdge>& edges() const noexcept { return edges_; }
    const std::optional<std::vector<NodeId>>& selected_path() const noexcept {
        return selected_path_;
    }

    std::optional<std::size_t> index_of(std::string_view id) const;
    const TraceNode* find(std::string_view id) const;
    /// Index of the first question node.
    std::optional<std::size_t> question_index() const noexcept { return question_; }

    /// Successor and predecessor indices, each list sorted by insertion order.
    const std::vector<std::size_t>& successors(std::size_t index) const { return out_[index]; }
    const std::vector<std::size_t>& predecessors(std::size_t index) const { return in_[index]; }

private:
    ReasoningMethod method_;
    std::vector<TraceNode> nodes_;
    std::vector<TraceEdge> edges_;
    std::optional<std::vector<NodeId>> selected_path_;
    std::unordered_map<std::string, std::size_t> index_;
    std::vector<std::vector<std::size_t>> out_;
    std::vector<std::vector<std::size_t>> in_;
    std::optional<std::size_t> question_;
};

struct NodeAttributes {
    std::optional<double> score;
    std::optional<int> level;
    std::optional<int> chain_index;
};

/// Incremental construction with sequential ids ("n0", "n1", ...) and
/// canonicalized labels.
class TraceBuilder {
public:
    explicit TraceBuilder(ReasoningMethod method) : method_(method) {}

    NodeId add_node(NodeKind kind, std::string_view label, NodeAttributes attributes = {});
    void add_edge(const NodeId& from, const NodeId& to);
    void set_selected_path(std::vector<NodeId> path) { selected_path_ = std::move(path); }

    std::size_t node_count() const noexcept { return nodes_.size(); }
    const TraceNode& node(std::size_t index) const { return nodes_[index]; }
    TraceNode& node(std::size_t index) { return nodes_[index]; }

    ReasoningTrace build() &&;

private:
    ReasoningMethod method_;
    std::vector<TraceNode> nodes_;
    std::vector<TraceEdge> edges_;
    std::optional<std::vector<NodeId>> selected_path_;
};

/// Trims and collapses internal whitespace runs to a single space.
std::string canonical_label(std::string_view text);

Diagnostics validate_trace(const ReasoningTrace& trace);

/// Kahn ordering; ties go to the node inserted first. Throws Error(cycle).
std::vector<NodeId> topological_order(const ReasoningTrace& trace);

/// Id-independent equality: same method, same node multiset, same edge
/// multiset keyed by endpoint content, same selected path content.
bool structurally_equal(const ReasoningTrace& a, const ReasoningTrace& b);

} // namespace reasongraph
