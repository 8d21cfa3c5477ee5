#pragma once

#include "reasongraph/diagnostic.hpp"
#include "reasongraph/trace.hpp"

#include <map>
#include <string>
#include <string_view>
#include <vector>

namespace reasongraph {

/// A root-to-leaf path through scored candidates, question and final excluded.
struct PathScore {
    std::vector<NodeId> path;
    double total = 0.0;
};

struct VoteResult {
    std::string winner;
    std::map<std::string, int> counts;
    bool tie = false;
};

struct TraceStats {
    std::size_t node_count = 0;
    std::size_t edge_count = 0;
    std::size_t depth = 0;     ///< longest path length in edges from the question
    std::size_t max_width = 0; ///< largest number of nodes sharing one longest-path layer
    std::map<NodeKind, std::size_t> kind_counts;
};

/// Relative tolerance under which two path totals count as tied.
inline constexpr double score_tie_tolerance = 1e-9;

/// Exhaustive search for the candidate path with the highest summed score.
/// Ties go to the path whose node insertion indices are lexicographically
/// smallest. When the trace declares a selected path that differs from the
/// optimum, a divergent_selection warning is appended to `diagnostics`.
/// Throws Error(wrong_method), Error(missing_score) or Error(no_paths).
PathScore best_beam_path(const ReasoningTrace& trace, Diagnostics& diagnostics);
PathScore best_beam_path(const ReasoningTrace& trace);

/// Lower-case, trim, collapse whitespace, drop one trailing period.
std::string normalize_answer(std::string_view answer);

/// Plurality vote over the per-chain answers. Throws Error(wrong_method) or
/// Error(no_chain_answers).
VoteResult majority_vote(const ReasoningTrace& trace);

TraceStats trace_stats(const ReasoningTrace& trace);

} // namespace reasongraph
