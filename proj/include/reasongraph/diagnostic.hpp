#pragma once

#include <cstddef>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace reasongraph {

enum class Severity { error, warning };

enum class DiagnosticCode {
    // trace structure
    missing_question,
    multiple_questions,
    duplicate_node_id,
    empty_label,
    unknown_edge_endpoint,
    self_loop,
    duplicate_edge,
    question_has_incoming,
    final_has_outgoing,
    cycle,
    unreachable_node,
    score_out_of_range,
    unexpected_score,
    missing_score,
    missing_level,
    level_mismatch,
    branching_width,
    invalid_selected_path,
    // extraction and assembly
    no_elements,
    unclosed_tag,
    malformed_tag,
    misplaced_element,
    missing_attribute,
    invalid_attribute,
    score_clamped,
    orphan_node,
    parent_cycle,
    missing_final_answer,
    duplicate_final_answer,
    unexpected_order,
    empty_chain,
    missing_chain_answer,
    unknown_path_node,
    broken_selected_path,
    // analysis
    divergent_selection,
    analysis_unavailable,
    // diagram text
    missing_header,
    invalid_statement,
    undeclared_node,
    undeclared_class,
    duplicate_node,
    unbalanced_brackets,
};

std::string_view to_string(DiagnosticCode code) noexcept;
std::string_view to_string(Severity severity) noexcept;

/// Half-open character range [start, end) into the text a diagnostic refers to.
struct Span {
    std::size_t start = 0;
    std::size_t end = 0;

    friend bool operator==(const Span&, const Span&) = default;
};

struct Diagnostic {
    DiagnosticCode code;
    Severity severity;
    std::string message;
    std::optional<Span> span;
    /// Offending node or edge id, empty when the diagnostic is not tied to one.
    std::string subject;

    static Diagnostic error(DiagnosticCode code, std::string message, std::string subject = {},
                            std::optional<Span> span = std::nullopt);
    static Diagnostic warning(DiagnosticCode code, std::string message, std::string subject = {},
                              std::optional<Span> span = std::nullopt);
};

using Diagnostics = std::vector<Diagnostic>;

bool has_errors(const Diagnostics& diagnostics) noexcept;
std::size_t count(const Diagnostics& diagnostics, DiagnosticCode code) noexcept;

} // namespace reasongraph
