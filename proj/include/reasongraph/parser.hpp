#pragma once

#include "reasongraph/diagnostic.hpp"
#include "reasongraph/grammar.hpp"
#include "reasongraph/tag_scanner.hpp"
#include "reasongraph/trace.hpp"

#include <optional>
#include <string>
#include <vector>

namespace reasongraph {

struct RawModelOutput {
    std::string text;
    ReasoningMethod method = ReasoningMethod::chain_of_thoughts;
    std::string question;
};

/// Label used for the question node when the caller has no question text.
inline constexpr std::string_view placeholder_question = "(question)";
/// Label of the node synthesized when the response has no <final_answer>.
inline constexpr std::string_view missing_final_label = "(no final answer)";

/// Scanner rules for a method's tag vocabulary.
std::vector<TagRule> scan_rules(const MethodGrammar& grammar);

Extraction extract_elements(const RawModelOutput& raw);

struct Assembly {
    ReasoningTrace trace;
    Diagnostics diagnostics;
};

/// Method-specific graph construction. Throws Error(invalid_trace) when
/// `elements` is empty; parse() reports that case as no_elements instead.
Assembly assemble_trace(const std::vector<Element>& elements, const RawModelOutput& raw);

struct ParseResult {
    /// Absent exactly when no grammar element was found (no_elements).
    std::optional<ReasoningTrace> trace;
    Diagnostics diagnostics;

    bool ok() const noexcept { return trace.has_value(); }
};

/// Total: returns a trace with any number of warnings, or no trace and a
/// single no_elements error among the diagnostics. Never throws for any text.
ParseResult parse(const RawModelOutput& raw);

} // namespace reasongraph
