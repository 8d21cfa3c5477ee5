#pragma once

#include "reasongraph/analysis.hpp"
#include "reasongraph/mermaid.hpp"
#include "reasongraph/parser.hpp"

#include <optional>
#include <variant>

namespace reasongraph {

using AnalysisResult = std::variant<std::monostate, PathScore, VoteResult>;

struct AnalysisOutcome {
    AnalysisResult result;
    /// Nodes to draw with the selected class.
    std::vector<NodeId> highlight;
};

/// Runs the method-appropriate analysis. Failures become analysis_unavailable
/// warnings and leave the trace's own selected path as the highlight.
AnalysisOutcome analyze(const ReasoningTrace& trace, Diagnostics& diagnostics);

/// analyze() followed by emit() with the computed highlight. Shared by the
/// CLI and the service so both produce identical text for identical input.
DiagramDocument render_diagram(const ReasoningTrace& trace, const VisualizationConfig& config,
                               Diagnostics& diagnostics, AnalysisResult* analysis = nullptr);

struct PipelineResult {
    std::optional<ReasoningTrace> trace;
    Diagnostics diagnostics;
    /// Empty text when no trace was produced.
    DiagramDocument diagram;
    AnalysisResult analysis;
    double parse_ms = 0.0;
    double emit_ms = 0.0;
};

/// parse, analyze, emit. Throws Error(invalid_config) for a bad config only.
PipelineResult run_pipeline(const RawModelOutput& raw, const VisualizationConfig& config);

} // namespace reasongraph
