#include "reasongraph/trace.hpp"
#include "reasongraph/error.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <map>
#include <queue>
#include <set>
#include <tuple>
#include <unordered_set>

namespace reasongraph {

std::string_view to_string(ReasoningMethod method) noexcept {
    switch (method) {
    case ReasoningMethod::chain_of_thoughts: return "chain_of_thoughts";
    case ReasoningMethod::self_refine: return "self_refine";
    case ReasoningMethod::least_to_most: return "least_to_most";
    case ReasoningMethod::self_consistency: return "self_consistency";
    case ReasoningMethod::tree_of_thoughts: return "tree_of_thoughts";
    case ReasoningMethod::beam_search: return "beam_search";
    }
    return "unknown";
}

std::string_view display_name(ReasoningMethod method) noexcept {
    switch (method) {
    case ReasoningMethod::chain_of_thoughts: return "Chain-of-Thoughts";
    case ReasoningMethod::self_refine: return "Self-refine";
    case ReasoningMethod::least_to_most: return "Least-to-Most";
    case ReasoningMethod::self_consistency: return "Self-consistency";
    case ReasoningMethod::tree_of_thoughts: return "Tree-of-Thoughts";
    case ReasoningMethod::beam_search: return "Beam Search";
    }
    return "Unknown";
}

std::optional<ReasoningMethod> method_from_string(std::string_view name) noexcept {
    for (auto method : all_methods) {
        if (to_string(method) == name) return method;
    }
    return std::nullopt;
}

bool is_tree_method(ReasoningMethod method) noexcept {
    return method == ReasoningMethod::tree_of_thoughts || method == ReasoningMethod::beam_search;
}

std::string_view to_string(NodeKind kind) noexcept {
    switch (kind) {
    case NodeKind::question: return "question";
    case NodeKind::step: return "step";
    case NodeKind::attempt: return "attempt";
    case NodeKind::reflection: return "reflection";
    case NodeKind::improvement: return "improvement";
    case NodeKind::sub_question: return "sub_question";
    case NodeKind::sub_answer: return "sub_answer";
    case NodeKind::candidate: return "candidate";
    case NodeKind::final_answer: return "final_answer";
    }
    return "unknown";
}

std::optional<NodeKind> node_kind_from_string(std::string_view name) noexcept {
    static constexpr NodeKind kinds[] = {
        NodeKind::question,     NodeKind::step,       NodeKind::attempt,
        NodeKind::reflection,   NodeKind::improvement, NodeKind::sub_question,
        NodeKind::sub_answer,   NodeKind::candidate,  NodeKind::final_answer,
    };
    for (auto kind : kinds) {
        if (to_string(kind) == name) return kind;
    }
    return std::nullopt;
}

ReasoningTrace::ReasoningTrace(ReasoningMethod method, std::vector<TraceNode> nodes,
                               std::vector<TraceEdge> edges,
                               std::optional<std::vector<NodeId>> selected_path)
    : method_(method),
      nodes_(std::move(nodes)),
      edges_(std::move(edges)),
      selected_path_(std::move(selected_path)),
      out_(nodes_.size()),
      in_(nodes_.size()) {
    for (std::size_t i = 0; i < nodes_.size(); ++i) {
        index_.try_emplace(nodes_[i].id, i);
        if (!question_ && nodes_[i].kind == NodeKind::question) question_ = i;
    }

    std::set<std::pair<std::string_view, std::string_view>> on_path;
    if (selected_path_) {
        for (std::size_t i = 1; i < selected_path_->size(); ++i) {
            on_path.emplace((*selected_path_)[i - 1], (*selected_path_)[i]);
        }
    }

    for (auto& edge : edges_) {
        edge.on_selected_path = on_path.count({edge.from, edge.to}) > 0;
        auto from = index_of(edge.from);
        auto to = index_of(edge.to);
        if (!from || !to) continue;
        out_[*from].push_back(*to);
        in_[*to].push_back(*from);
    }
    for (auto& list : out_) std::sort(list.begin(), list.end());
    for (auto& list : in_) std::sort(list.begin(), list.end());
}

std::optional<std::size_t> ReasoningTrace::index_of(std::string_view id) const {
    auto it = index_.find(std::string(id));
    if (it == index_.end()) return std::nullopt;
    return it->second;
}

const TraceNode* ReasoningTrace::find(std::string_view id) const {
    auto index = index_of(id);
    return index ? &nodes_[*index] : nullptr;
}

NodeId TraceBuilder::add_node(NodeKind kind, std::string_view label, NodeAttributes attributes) {
    NodeId id = "n" + std::to_string(nodes_.size());
    nodes_.push_back(TraceNode{id, kind, canonical_label(label), attributes.score,
                               attributes.level, attributes.chain_index});
    return id;
}

void TraceBuilder::add_edge(const NodeId& from, const NodeId& to) {
    edges_.push_back(TraceEdge{from, to, false});
}

ReasoningTrace TraceBuilder::build() && {
    return ReasoningTrace(method_, std::move(nodes_), std::move(edges_), std::move(selected_path_));
}

namespace {

bool is_space(char c) noexcept {
    return c == ' ' || c == '\t' || c == '\n' || c == '\r' || c == '\f' || c == '\v';
}

// Breadth-first hop distance from the question node; nullopt when unreachable.
std::vector<std::optional<int>> hop_distances(const ReasoningTrace& trace) {
    std::vector<std::optional<int>> dist(trace.nodes().size());
    auto root = trace.question_index();
    if (!root) return dist;
    std::queue<std::size_t> queue;
    dist[*root] = 0;
    queue.push(*root);
    while (!queue.empty()) {
        auto current = queue.front();
        queue.pop();
        for (auto next : trace.successors(current)) {
            if (dist[next]) continue;
            dist[next] = *dist[current] + 1;
            queue.push(next);
        }
    }
    return dist;
}

void check_branching_width(const ReasoningTrace& trace, Diagnostics& out) {
    const auto& nodes = trace.nodes();
    std::map<int, std::vector<std::size_t>> by_level;
    for (std::size_t i = 0; i < nodes.size(); ++i) {
        const auto kind = nodes[i].kind;
        if ((kind == NodeKind::question || kind == NodeKind::candidate) && nodes[i].level) {
            by_level[*nodes[i].level].push_back(i);
        }
    }
    for (const auto& [level, members] : by_level) {
        std::map<std::size_t, std::size_t> frequency;
        std::vector<std::size_t> child_counts;
        for (auto index : members) {
            std::size_t children = 0;
            for (auto next : trace.successors(index)) {
                if (nodes[next].kind == NodeKind::candidate) ++children;
            }
            child_counts.push_back(children);
            ++frequency[children];
        }
        if (frequency.size() <= 1) continue;
        // The most common count is taken as the level's width.
        auto width = std::max_element(frequency.begin(), frequency.end(),
                                      [](const auto& a, const auto& b) { return a.second < b.second; })
                         ->first;
        for (std::size_t k = 0; k < members.size(); ++k) {
            if (child_counts[k] == width) continue;
            out.push_back(Diagnostic::warning(
                DiagnosticCode::branching_width,
                "level " + std::to_string(level) + " has branching width " + std::to_string(width) +
                    " but node has " + std::to_string(child_counts[k]) + " children",
                nodes[members[k]].id));
        }
    }
}

} // namespace

std::string canonical_label(std::string_view text) {
    std::string out;
    out.reserve(text.size());
    bool pending_space = false;
    for (char c : text) {
        if (is_space(c)) {
            pending_space = !out.empty();
            continue;
        }
        if (pending_space) out.push_back(' ');
        pending_space = false;
        out.push_back(c);
    }
    return out;
}

Diagnostics validate_trace(const ReasoningTrace& trace) {
    Diagnostics out;
    const auto& nodes = trace.nodes();
    const bool tree = is_tree_method(trace.method());

    std::unordered_set<std::string_view> seen_ids;
    std::size_t questions = 0;
    for (const auto& node : nodes) {
        if (!seen_ids.insert(node.id).second) {
            out.push_back(Diagnostic::error(DiagnosticCode::duplicate_node_id,
                                            "node id '" + node.id + "' is used more than once", node.id));
        }
        if (node.kind == NodeKind::question && ++questions == 2) {
            out.push_back(Diagnostic::error(DiagnosticCode::multiple_questions,
                                            "trace has more than one question node", node.id));
        }
        if (canonical_label(node.label).empty()) {
            out.push_back(Diagnostic::error(DiagnosticCode::empty_label, "node label is empty", node.id));
        }
        if (node.score) {
            const double s = *node.score;
            if (!(s >= 0.0 && s <= 1.0)) {
                out.push_back(Diagnostic::error(DiagnosticCode::score_out_of_range,
                                                "score must lie in [0,1]", node.id));
            }
            if (!tree) {
                out.push_back(Diagnostic::error(DiagnosticCode::unexpected_score,
                                                "scores are only meaningful for tree methods", node.id));
            }
        }
        if (tree && !node.level) {
            out.push_back(Diagnostic::error(DiagnosticCode::missing_level,
                                            "tree method node has no level", node.id));
        }
        if (trace.method() == ReasoningMethod::beam_search && node.kind == NodeKind::candidate &&
            !node.score) {
            out.push_back(Diagnostic::warning(DiagnosticCode::missing_score,
                                              "beam search node has no score", node.id));
        }
    }
    if (questions == 0) {
        out.push_back(Diagnostic::error(DiagnosticCode::missing_question, "trace has no question node"));
    }

    std::set<std::pair<std::string_view, std::string_view>> seen_edges;
    for (const auto& edge : trace.edges()) {
        const std::string subject = edge.from + "->" + edge.to;
        const auto* from = trace.find(edge.from);
        const auto* to = trace.find(edge.to);
        if (!from || !to) {
            out.push_back(Diagnostic::error(DiagnosticCode::unknown_edge_endpoint,
                                            "edge refers to a node that does not exist", subject));
            continue;
        }
        if (edge.from == edge.to) {
            out.push_back(Diagnostic::error(DiagnosticCode::self_loop, "edge loops onto its own node", subject));
        }
        if (!seen_edges.emplace(edge.from, edge.to).second) {
            out.push_back(Diagnostic::error(DiagnosticCode::duplicate_edge, "edge appears more than once", subject));
        }
        if (to->kind == NodeKind::question) {
            out.push_back(Diagnostic::error(DiagnosticCode::question_has_incoming,
                                            "question node has an incoming edge", subject));
        }
        if (from->kind == NodeKind::final_answer) {
            out.push_back(Diagnostic::error(DiagnosticCode::final_has_outgoing,
                                            "final answer node has an outgoing edge", subject));
        }
    }

    // Kahn's algorithm; whatever keeps a positive in-degree sits on or behind a cycle.
    std::vector<std::size_t> indegree(nodes.size());
    for (std::size_t i = 0; i < nodes.size(); ++i) indegree[i] = trace.predecessors(i).size();
    std::queue<std::size_t> ready;
    for (std::size_t i = 0; i < nodes.size(); ++i) {
        if (indegree[i] == 0) ready.push(i);
    }
    std::size_t removed = 0;
    while (!ready.empty()) {
        auto current = ready.front();
        ready.pop();
        ++removed;
        for (auto next : trace.successors(current)) {
            if (--indegree[next] == 0) ready.push(next);
        }
    }
    if (removed != nodes.size()) {
        std::string members;
        std::string first;
        for (std::size_t i = 0; i < nodes.size(); ++i) {
            if (indegree[i] == 0) continue;
            if (first.empty()) first = nodes[i].id;
            members += (members.empty() ? "" : ", ") + nodes[i].id;
        }
        out.push_back(Diagnostic::error(DiagnosticCode::cycle, "graph contains a cycle through " + members, first));
    }

    const auto dist = hop_distances(trace);
    if (trace.question_index()) {
        for (std::size_t i = 0; i < nodes.size(); ++i) {
            if (!dist[i]) {
                out.push_back(Diagnostic::error(DiagnosticCode::unreachable_node,
                                                "node is not reachable from the question", nodes[i].id));
            } else if (tree && nodes[i].level && *nodes[i].level != *dist[i]) {
                out.push_back(Diagnostic::warning(
                    DiagnosticCode::level_mismatch,
                    "declared level " + std::to_string(*nodes[i].level) + " but node is " +
                        std::to_string(*dist[i]) + " steps from the question",
                    nodes[i].id));
            }
        }
    }

    if (trace.method() == ReasoningMethod::beam_search) check_branching_width(trace, out);

    if (const auto& path = trace.selected_path()) {
        auto fail = [&](const std::string& why, const std::string& subject) {
            out.push_back(Diagnostic::error(DiagnosticCode::invalid_selected_path, why, subject));
        };
        if (path->empty()) {
            fail("selected path is empty", {});
        } else {
            const auto* head = trace.find(path->front());
            const auto* tail = trace.find(path->back());
            if (!head || head->kind != NodeKind::question) fail("selected path must start at the question", path->front());
            if (!tail || tail->kind != NodeKind::final_answer) fail("selected path must end at the final answer", path->back());
            for (std::size_t i = 0; i < path->size(); ++i) {
                if (!trace.find((*path)[i])) {
                    fail("selected path names an unknown node", (*path)[i]);
                    continue;
                }
                if (i == 0) continue;
                auto from = trace.index_of((*path)[i - 1]);
                auto to = trace.index_of((*path)[i]);
                if (!from || !to) continue;
                const auto& next = trace.successors(*from);
                if (!std::binary_search(next.begin(), next.end(), *to)) {
                    fail("selected path step is not an edge", (*path)[i - 1] + "->" + (*path)[i]);
                }
            }
        }
    }
    return out;
}

std::vector<NodeId> topological_order(const ReasoningTrace& trace) {
    const auto& nodes = trace.nodes();
    std::vector<std::size_t> indegree(nodes.size());
    std::priority_queue<std::size_t, std::vector<std::size_t>, std::greater<>> ready;
    for (std::size_t i = 0; i < nodes.size(); ++i) {
        indegree[i] = trace.predecessors(i).size();
        if (indegree[i] == 0) ready.push(i);
    }
    std::vector<NodeId> order;
    order.reserve(nodes.size());
    while (!ready.empty()) {
        auto current = ready.top();
        ready.pop();
        order.push_back(nodes[current].id);
        for (auto next : trace.successors(current)) {
            if (--indegree[next] == 0) ready.push(next);
        }
    }
    if (order.size() != nodes.size()) {
        throw Error(ErrorCode::cycle, "trace contains a cycle; no topological order exists");
    }
    return order;
}

namespace {

using NodeSignature = std::tuple<NodeKind, std::string, std::optional<double>, std::optional<int>,
                                 std::optional<int>>;

NodeSignature signature(const TraceNode& node) {
    return {node.kind, node.label, node.score, node.level, node.chain_index};
}

} // namespace

bool structurally_equal(const ReasoningTrace& a, const ReasoningTrace& b) {
    if (a.method() != b.method()) return false;
    if (a.nodes().size() != b.nodes().size() || a.edges().size() != b.edges().size()) return false;

    auto node_multiset = [](const ReasoningTrace& t) {
        std::vector<NodeSignature> out;
        for (const auto& node : t.nodes()) out.push_back(signature(node));
        std::sort(out.begin(), out.end());
        return out;
    };
    if (node_multiset(a) != node_multiset(b)) return false;

    auto edge_multiset = [](const ReasoningTrace& t) {
        std::vector<std::pair<NodeSignature, NodeSignature>> out;
        for (const auto& edge : t.edges()) {
            const auto* from = t.find(edge.from);
            const auto* to = t.find(edge.to);
            if (!from || !to) return std::optional<decltype(out)>{};
            out.emplace_back(signature(*from), signature(*to));
        }
        std::sort(out.begin(), out.end());
        return std::optional<decltype(out)>{std::move(out)};
    };
    auto edges_a = edge_multiset(a);
    auto edges_b = edge_multiset(b);
    if (!edges_a || !edges_b || *edges_a != *edges_b) return false;

    auto path_signature = [](const ReasoningTrace& t) {
        std::optional<std::vector<NodeSignature>> out;
        if (!t.selected_path()) return out;
        out.emplace();
        for (const auto& id : *t.selected_path()) {
            const auto* node = t.find(id);
            if (!node) return std::optional<std::vector<NodeSignature>>{};
            out->push_back(signature(*node));
        }
        return out;
    };
    return path_signature(a) == path_signature(b);
}

} // namespace reasongraph
