#pragma once

#include "reasongraph/analysis.hpp"
#include "reasongraph/diagnostic.hpp"
#include "reasongraph/grammar.hpp"
#include "reasongraph/mermaid.hpp"
#include "reasongraph/trace.hpp"

#include <nlohmann/json.hpp>

#include <string>

namespace reasongraph {

using Json = nlohmann::json;

/// Canonical trace JSON: method, nodes[], edges[], selected_path (null when absent).
/// Optional node fields are omitted when unset.
Json to_json(const ReasoningTrace& trace);
/// Throws Error(invalid_trace) when the document does not have the canonical shape.
/// Structural checks are left to validate_trace.
ReasoningTrace trace_from_json(const Json& doc);

Json to_json(const Diagnostic& diagnostic);
Json to_json(const Diagnostics& diagnostics);
Json to_json(const DiagramDocument& doc);
Json to_json(const PathScore& score);
Json to_json(const VoteResult& vote);
Json to_json(const TraceStats& stats);
Json to_json(const VisualizationConfig& config);
Json to_json(const MethodParams& params);

/// Fields absent from `doc` keep their defaults; unknown fields are rejected.
/// Throws Error(invalid_config), including for invariant breaches.
VisualizationConfig viz_config_from_json(const Json& doc);
/// Throws Error(invalid_params).
MethodParams method_params_from_json(const Json& doc);

/// Describes which MethodParams fields a method's prompt consumes.
Json params_schema(ReasoningMethod method);

/// Serializes with invalid UTF-8 replaced rather than thrown on.
std::string dump(const Json& doc, int indent = -1);

} // namespace reasongraph
