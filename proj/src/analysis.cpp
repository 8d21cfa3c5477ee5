#include "reasongraph/analysis.hpp"
#include "reasongraph/error.hpp"

#include <algorithm>
#include <cmath>

namespace reasongraph {

namespace {

bool tied(double a, double b) {
    const double scale = std::max({1.0, std::fabs(a), std::fabs(b)});
    return std::fabs(a - b) <= score_tie_tolerance * scale;
}

class PathSearch {
public:
    explicit PathSearch(const ReasoningTrace& trace) : trace_(trace), on_stack_(trace.nodes().size(), false) {}

    void from(std::size_t root) { visit(root, 0.0); }

    bool found() const { return found_; }
    const std::vector<std::size_t>& best() const { return best_; }
    double best_total() const { return best_total_; }

private:
    void visit(std::size_t index, double running) {
        if (on_stack_[index]) return;
        on_stack_[index] = true;
        path_.push_back(index);
        const double total = running + *trace_.nodes()[index].score;

        bool leaf = true;
        for (auto next : trace_.successors(index)) {
            if (trace_.nodes()[next].kind != NodeKind::candidate) continue;
            leaf = false;
            visit(next, total);
        }
        if (leaf && (!found_ || (total > best_total_ && !tied(total, best_total_)))) {
            found_ = true;
            best_total_ = total;
            best_ = path_;
        }
        path_.pop_back();
        on_stack_[index] = false;
    }

    const ReasoningTrace& trace_;
    std::vector<bool> on_stack_;
    std::vector<std::size_t> path_;
    std::vector<std::size_t> best_;
    double best_total_ = 0.0;
    bool found_ = false;
};

} // namespace

PathScore best_beam_path(const ReasoningTrace& trace, Diagnostics& diagnostics) {
    if (trace.method() != ReasoningMethod::beam_search) {
        throw Error(ErrorCode::wrong_method, "best path selection applies to beam_search traces only");
    }
    const auto& nodes = trace.nodes();
    for (const auto& node : nodes) {
        if (node.kind == NodeKind::candidate && !node.score) {
            throw Error(ErrorCode::missing_score, "node " + node.id + " has no score");
        }
    }
    auto question = trace.question_index();
    if (!question) throw Error(ErrorCode::no_paths, "trace has no question node");

    PathSearch search(trace);
    for (auto root : trace.successors(*question)) {
        if (nodes[root].kind == NodeKind::candidate) search.from(root);
    }
    if (!search.found()) throw Error(ErrorCode::no_paths, "trace has no scored candidate path");

    PathScore result;
    for (auto index : search.best()) result.path.push_back(nodes[index].id);
    // Re-sum in path order so that the total is exactly the member sum.
    for (auto index : search.best()) result.total += *nodes[index].score;

    if (const auto& declared = trace.selected_path()) {
        std::vector<NodeId> candidates;
        for (const auto& id : *declared) {
            const auto* node = trace.find(id);
            if (node && node->kind == NodeKind::candidate) candidates.push_back(id);
        }
        if (candidates != result.path) {
            diagnostics.push_back(Diagnostic::warning(
                DiagnosticCode::divergent_selection,
                "model-selected path differs from the highest-scoring path; highlighting the computed one",
                result.path.empty() ? std::string() : result.path.back()));
        }
    }
    return result;
}

PathScore best_beam_path(const ReasoningTrace& trace) {
    Diagnostics ignored;
    return best_beam_path(trace, ignored);
}

std::string normalize_answer(std::string_view answer) {
    std::string lowered;
    lowered.reserve(answer.size());
    for (char c : answer) lowered.push_back((c >= 'A' && c <= 'Z') ? static_cast<char>(c + 32) : c);
    auto text = canonical_label(lowered);
    if (!text.empty() && text.back() == '.') {
        text.pop_back();
        text = canonical_label(text);
    }
    return text;
}

VoteResult majority_vote(const ReasoningTrace& trace) {
    if (trace.method() != ReasoningMethod::self_consistency) {
        throw Error(ErrorCode::wrong_method, "majority voting applies to self_consistency traces only");
    }
    struct Tally {
        int count = 0;
        int first_chain = 0;
    };
    std::map<std::string, Tally> tallies;
    int fallback_index = 0;
    for (const auto& node : trace.nodes()) {
        if (node.kind != NodeKind::candidate) continue;
        const int chain = node.chain_index.value_or(fallback_index);
        ++fallback_index;
        auto [it, inserted] = tallies.try_emplace(normalize_answer(node.label), Tally{0, chain});
        it->second.count += 1;
        it->second.first_chain = std::min(it->second.first_chain, chain);
    }
    if (tallies.empty()) throw Error(ErrorCode::no_chain_answers, "trace has no chain answers");

    VoteResult result;
    int best_count = 0;
    int best_chain = 0;
    for (const auto& [answer, tally] : tallies) {
        result.counts[answer] = tally.count;
        if (tally.count > best_count || (tally.count == best_count && tally.first_chain < best_chain)) {
            best_count = tally.count;
            best_chain = tally.first_chain;
            result.winner = answer;
        }
    }
    result.tie = std::count_if(tallies.begin(), tallies.end(),
                               [&](const auto& entry) { return entry.second.count == best_count; }) > 1;
    return result;
}

TraceStats trace_stats(const ReasoningTrace& trace) {
    TraceStats stats;
    const auto& nodes = trace.nodes();
    stats.node_count = nodes.size();
    stats.edge_count = trace.edges().size();
    for (const auto& node : nodes) ++stats.kind_counts[node.kind];

    auto question = trace.question_index();
    if (!question) return stats;

    std::vector<long> layer(nodes.size(), -1);
    layer[*question] = 0;
    for (const auto& id : topological_order(trace)) {
        const auto index = *trace.index_of(id);
        if (layer[index] < 0) continue;
        for (auto next : trace.successors(index)) layer[next] = std::max(layer[next], layer[index] + 1);
    }
    std::map<long, std::size_t> width;
    for (auto value : layer) {
        if (value < 0) continue;
        stats.depth = std::max(stats.depth, static_cast<std::size_t>(value));
        ++width[value];
    }
    for (const auto& [_, count] : width) stats.max_width = std::max(stats.max_width, count);
    return stats;
}

} // namespace reasongraph
