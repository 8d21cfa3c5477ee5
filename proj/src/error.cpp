#include "reasongraph/error.hpp"
#include "reasongraph/diagnostic.hpp"

#include <algorithm>

namespace reasongraph {

std::string_view to_string(ErrorCode code) noexcept {
    switch (code) {
    case ErrorCode::empty_question: return "empty_question";
    case ErrorCode::invalid_params: return "invalid_params";
    case ErrorCode::unknown_method: return "unknown_method";
    case ErrorCode::no_selection_found: return "no_selection_found";
    case ErrorCode::cycle: return "cycle";
    case ErrorCode::invalid_trace: return "invalid_trace";
    case ErrorCode::wrong_method: return "wrong_method";
    case ErrorCode::missing_score: return "missing_score";
    case ErrorCode::no_paths: return "no_paths";
    case ErrorCode::no_chain_answers: return "no_chain_answers";
    case ErrorCode::invalid_config: return "invalid_config";
    case ErrorCode::malformed_config: return "malformed_config";
    case ErrorCode::duplicate_provider_id: return "duplicate_provider_id";
    case ErrorCode::unknown_provider: return "unknown_provider";
    case ErrorCode::unknown_model: return "unknown_model";
    case ErrorCode::provider_unavailable: return "provider_unavailable";
    case ErrorCode::unauthorized: return "unauthorized";
    case ErrorCode::rate_limited: return "rate_limited";
    case ErrorCode::provider_error: return "provider_error";
    case ErrorCode::timeout: return "timeout";
    case ErrorCode::malformed_provider_response: return "malformed_provider_response";
    }
    return "unknown";
}

std::string_view to_string(Severity severity) noexcept {
    return severity == Severity::error ? "error" : "warning";
}

std::string_view to_string(DiagnosticCode code) noexcept {
    switch (code) {
    case DiagnosticCode::missing_question: return "missing_question";
    case DiagnosticCode::multiple_questions: return "multiple_questions";
    case DiagnosticCode::duplicate_node_id: return "duplicate_node_id";
    case DiagnosticCode::empty_label: return "empty_label";
    case DiagnosticCode::unknown_edge_endpoint: return "unknown_edge_endpoint";
    case DiagnosticCode::self_loop: return "self_loop";
    case DiagnosticCode::duplicate_edge: return "duplicate_edge";
    case DiagnosticCode::question_has_incoming: return "question_has_incoming";
    case DiagnosticCode::final_has_outgoing: return "final_has_outgoing";
    case DiagnosticCode::cycle: return "cycle";
    case DiagnosticCode::unreachable_node: return "unreachable_node";
    case DiagnosticCode::score_out_of_range: return "score_out_of_range";
    case DiagnosticCode::unexpected_score: return "unexpected_score";
    case DiagnosticCode::missing_score: return "missing_score";
    case DiagnosticCode::missing_level: return "missing_level";
    case DiagnosticCode::level_mismatch: return "level_mismatch";
    case DiagnosticCode::branching_width: return "branching_width";
    case DiagnosticCode::invalid_selected_path: return "invalid_selected_path";
    case DiagnosticCode::no_elements: return "no_elements";
    case DiagnosticCode::unclosed_tag: return "unclosed_tag";
    case DiagnosticCode::malformed_tag: return "malformed_tag";
    case DiagnosticCode::misplaced_element: return "misplaced_element";
    case DiagnosticCode::missing_attribute: return "missing_attribute";
    case DiagnosticCode::invalid_attribute: return "invalid_attribute";
    case DiagnosticCode::score_clamped: return "score_clamped";
    case DiagnosticCode::orphan_node: return "orphan_node";
    case DiagnosticCode::parent_cycle: return "parent_cycle";
    case DiagnosticCode::missing_final_answer: return "missing_final_answer";
    case DiagnosticCode::duplicate_final_answer: return "duplicate_final_answer";
    case DiagnosticCode::unexpected_order: return "unexpected_order";
    case DiagnosticCode::empty_chain: return "empty_chain";
    case DiagnosticCode::missing_chain_answer: return "missing_chain_answer";
    case DiagnosticCode::unknown_path_node: return "unknown_path_node";
    case DiagnosticCode::broken_selected_path: return "broken_selected_path";
    case DiagnosticCode::divergent_selection: return "divergent_selection";
    case DiagnosticCode::analysis_unavailable: return "analysis_unavailable";
    case DiagnosticCode::missing_header: return "missing_header";
    case DiagnosticCode::invalid_statement: return "invalid_statement";
    case DiagnosticCode::undeclared_node: return "undeclared_node";
    case DiagnosticCode::undeclared_class: return "undeclared_class";
    case DiagnosticCode::duplicate_node: return "duplicate_node";
    case DiagnosticCode::unbalanced_brackets: return "unbalanced_brackets";
    }
    return "unknown";
}

Diagnostic Diagnostic::error(DiagnosticCode code, std::string message, std::string subject,
                             std::optional<Span> span) {
    return {code, Severity::error, std::move(message), span, std::move(subject)};
}

Diagnostic Diagnostic::warning(DiagnosticCode code, std::string message, std::string subject,
                               std::optional<Span> span) {
    return {code, Severity::warning, std::move(message), span, std::move(subject)};
}

bool has_errors(const Diagnostics& diagnostics) noexcept {
    return std::any_of(diagnostics.begin(), diagnostics.end(),
                       [](const Diagnostic& d) { return d.severity == Severity::error; });
}

std::size_t count(const Diagnostics& diagnostics, DiagnosticCode code) noexcept {
    return static_cast<std::size_t>(std::count_if(
        diagnostics.begin(), diagnostics.end(), [code](const Diagnostic& d) { return d.code == code; }));
}

} // namespace reasongraph
