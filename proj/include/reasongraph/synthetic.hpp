#pragma once

#include "reasongraph/parser.hpp"
#include "reasongraph/trace.hpp"

#include <random>
#include <string>

namespace reasongraph {

struct SyntheticOptions {
    int max_steps = 6;       ///< linear methods: steps, refinement rounds, sub-question pairs
    int max_chains = 5;      ///< self_consistency
    int max_depth = 4;       ///< tree methods
    int max_width = 4;       ///< tree methods: children per parent
    int max_tree_nodes = 24; ///< tree_of_thoughts only; beam size follows from width and depth
};

/// A random trace of the given method that is valid by construction and
/// exactly representable in the method's grammar.
ReasoningTrace random_trace(ReasoningMethod method, std::mt19937_64& rng, const SyntheticOptions& options = {});

/// Tag-free filler text, possibly spanning several lines.
std::string random_prose(std::mt19937_64& rng);

/// Prints the trace in its method's grammar. The question is not part of the
/// output; pass it to the parser separately. When `prose` is given, random
/// filler is inserted between elements.
std::string print_trace(const ReasoningTrace& trace, std::mt19937_64* prose = nullptr);

/// print_trace packaged with the method and the question label.
RawModelOutput printed_output(const ReasoningTrace& trace, std::mt19937_64* prose = nullptr);

} // namespace reasongraph
