#pragma once

#include "reasongraph/diagnostic.hpp"
#include "reasongraph/trace.hpp"

#include <map>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace reasongraph {

enum class Direction { top_down, left_right };

std::string_view to_string(Direction direction) noexcept;

/// Fill colours, each "#rgb" or "#rrggbb".
struct Theme {
    std::string question = "#93c5fd";
    std::string step = "#f3f4f6";
    std::string reflection = "#fde68a";
    std::string subquestion = "#e0f2fe";
    std::string final = "#bbf7d0";
    std::string selected = "#1d4ed8";
};

struct VisualizationConfig {
    Direction direction = Direction::top_down;
    int wrap_width = 30;
    bool show_scores = true;
    int max_label_chars = 240;
    Theme theme;

    /// Throws Error(invalid_config).
    void validate() const;
};

inline constexpr int min_wrap_width = 8;
inline constexpr int max_wrap_width = 120;

struct DiagramDocument {
    std::string text;
    std::map<std::string, NodeId> id_map; ///< diagram node id -> trace node id
    std::vector<std::string> styles;      ///< classDef statements in emission order
};

/// Renders the trace as flowchart text. Nodes listed in `highlight` (other
/// than the question and final answer) take the selected class.
/// Throws Error(invalid_config) and, for cyclic input, Error(cycle).
DiagramDocument emit(const ReasoningTrace& trace, const VisualizationConfig& config,
                     std::span<const NodeId> highlight);
/// Highlights the trace's own selected path.
DiagramDocument emit(const ReasoningTrace& trace, const VisualizationConfig& config = {});

/// Makes text safe inside a double-quoted node label.
std::string escape_label(std::string_view label);

/// Truncates to `max_label_chars` code points (appending an ellipsis) and
/// greedily wraps at spaces, hard-splitting tokens wider than `wrap_width`.
std::vector<std::string> wrap_lines(std::string_view label, int wrap_width, int max_label_chars);
/// wrap_lines joined with "<br/>".
std::string wrap_label(std::string_view label, int wrap_width, int max_label_chars);

Diagnostics validate_diagram(const DiagramDocument& doc);

} // namespace reasongraph
