#include "reasongraph/pipeline.hpp"
#include "reasongraph/error.hpp"

#include <chrono>

namespace reasongraph {

namespace {

double elapsed_ms(std::chrono::steady_clock::time_point since) {
    return std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - since).count();
}

std::vector<NodeId> declared_highlight(const ReasoningTrace& trace) {
    return trace.selected_path() ? *trace.selected_path() : std::vector<NodeId>{};
}

} // namespace

AnalysisOutcome analyze(const ReasoningTrace& trace, Diagnostics& diagnostics) {
    AnalysisOutcome outcome;
    try {
        switch (trace.method()) {
        case ReasoningMethod::beam_search: {
            auto best = best_beam_path(trace, diagnostics);
            outcome.highlight = best.path;
            outcome.result = std::move(best);
            return outcome;
        }
        case ReasoningMethod::self_consistency:
            outcome.result = majority_vote(trace);
            break;
        default:
            break;
        }
    } catch (const Error& e) {
        diagnostics.push_back(Diagnostic::warning(DiagnosticCode::analysis_unavailable, e.what()));
    }
    outcome.highlight = declared_highlight(trace);
    return outcome;
}

DiagramDocument render_diagram(const ReasoningTrace& trace, const VisualizationConfig& config,
                               Diagnostics& diagnostics, AnalysisResult* analysis) {
    auto outcome = analyze(trace, diagnostics);
    auto doc = emit(trace, config, outcome.highlight);
    if (analysis) *analysis = std::move(outcome.result);
    return doc;
}

PipelineResult run_pipeline(const RawModelOutput& raw, const VisualizationConfig& config) {
    config.validate();
    PipelineResult result;
    auto start = std::chrono::steady_clock::now();
    auto parsed = parse(raw);
    result.parse_ms = elapsed_ms(start);
    result.diagnostics = std::move(parsed.diagnostics);
    if (!parsed.trace) return result;

    start = std::chrono::steady_clock::now();
    try {
        result.diagram = render_diagram(*parsed.trace, config, result.diagnostics, &result.analysis);
    } catch (const Error& e) {
        if (e.code() != ErrorCode::cycle) throw;
        // validate_trace has already reported the cycle.
    }
    result.emit_ms = elapsed_ms(start);
    result.trace = std::move(parsed.trace);
    return result;
}

} // namespace reasongraph
