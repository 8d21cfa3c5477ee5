#include "reasongraph/json_io.hpp"
#include "reasongraph/error.hpp"

#include <limits>

namespace reasongraph {

namespace {

[[noreturn]] void bad_trace(const std::string& message) {
    throw Error(ErrorCode::invalid_trace, "invalid trace JSON: " + message);
}

const Json& member(const Json& object, const char* key, const std::string& where) {
    auto it = object.find(key);
    if (it == object.end()) bad_trace(where + " lacks \"" + key + "\"");
    return *it;
}

std::string string_member(const Json& object, const char* key, const std::string& where) {
    const auto& value = member(object, key, where);
    if (!value.is_string()) bad_trace(where + "." + key + " must be a string");
    return value.get<std::string>();
}

std::optional<int> optional_count(const Json& object, const char* key, const std::string& where) {
    auto it = object.find(key);
    if (it == object.end() || it->is_null()) return std::nullopt;
    if (!it->is_number_integer()) bad_trace(where + "." + key + " must be an integer");
    const auto value = it->get<long long>();
    if (value < 0 || value > std::numeric_limits<int>::max()) bad_trace(where + "." + key + " is out of range");
    return static_cast<int>(value);
}

template <class Fail>
int int_value(const Json& value, const std::string& key, Fail fail) {
    if (!value.is_number_integer()) fail(key + " must be an integer");
    const auto n = value.get<long long>();
    if (n < std::numeric_limits<int>::min() || n > std::numeric_limits<int>::max()) fail(key + " is out of range");
    return static_cast<int>(n);
}

} // namespace

Json to_json(const ReasoningTrace& trace) {
    Json nodes = Json::array();
    for (const auto& node : trace.nodes()) {
        Json entry{{"id", node.id}, {"kind", to_string(node.kind)}, {"label", node.label}};
        if (node.score) entry["score"] = *node.score;
        if (node.level) entry["level"] = *node.level;
        if (node.chain_index) entry["chain_index"] = *node.chain_index;
        nodes.push_back(std::move(entry));
    }
    Json edges = Json::array();
    for (const auto& edge : trace.edges()) {
        edges.push_back({{"from", edge.from}, {"to", edge.to}, {"on_selected_path", edge.on_selected_path}});
    }
    Json doc{{"method", to_string(trace.method())}, {"nodes", std::move(nodes)}, {"edges", std::move(edges)}};
    doc["selected_path"] = trace.selected_path() ? Json(*trace.selected_path()) : Json(nullptr);
    return doc;
}

ReasoningTrace trace_from_json(const Json& doc) {
    if (!doc.is_object()) bad_trace("document must be an object");
    const auto method_name = string_member(doc, "method", "trace");
    const auto method = method_from_string(method_name);
    if (!method) bad_trace("unknown method \"" + method_name + "\"");

    const auto& node_list = member(doc, "nodes", "trace");
    if (!node_list.is_array()) bad_trace("nodes must be an array");
    std::vector<TraceNode> nodes;
    nodes.reserve(node_list.size());
    for (std::size_t i = 0; i < node_list.size(); ++i) {
        const auto& entry = node_list[i];
        const auto where = "nodes[" + std::to_string(i) + "]";
        if (!entry.is_object()) bad_trace(where + " must be an object");
        TraceNode node;
        node.id = string_member(entry, "id", where);
        const auto kind_name = string_member(entry, "kind", where);
        const auto kind = node_kind_from_string(kind_name);
        if (!kind) bad_trace(where + ".kind \"" + kind_name + "\" is unknown");
        node.kind = *kind;
        node.label = string_member(entry, "label", where);
        if (auto it = entry.find("score"); it != entry.end() && !it->is_null()) {
            if (!it->is_number()) bad_trace(where + ".score must be a number");
            node.score = it->get<double>();
        }
        node.level = optional_count(entry, "level", where);
        node.chain_index = optional_count(entry, "chain_index", where);
        nodes.push_back(std::move(node));
    }

    const auto& edge_list = member(doc, "edges", "trace");
    if (!edge_list.is_array()) bad_trace("edges must be an array");
    std::vector<TraceEdge> edges;
    edges.reserve(edge_list.size());
    for (std::size_t i = 0; i < edge_list.size(); ++i) {
        const auto& entry = edge_list[i];
        const auto where = "edges[" + std::to_string(i) + "]";
        if (!entry.is_object()) bad_trace(where + " must be an object");
        edges.push_back({string_member(entry, "from", where), string_member(entry, "to", where), false});
    }

    std::optional<std::vector<NodeId>> selected;
    if (auto it = doc.find("selected_path"); it != doc.end() && !it->is_null()) {
        if (!it->is_array()) bad_trace("selected_path must be an array or null");
        selected.emplace();
        for (const auto& id : *it) {
            if (!id.is_string()) bad_trace("selected_path entries must be strings");
            selected->push_back(id.get<std::string>());
        }
    }
    return ReasoningTrace(*method, std::move(nodes), std::move(edges), std::move(selected));
}

Json to_json(const Diagnostic& diagnostic) {
    Json doc{{"code", to_string(diagnostic.code)},
             {"severity", to_string(diagnostic.severity)},
             {"message", diagnostic.message},
             {"subject", diagnostic.subject}};
    doc["span"] = diagnostic.span ? Json{{"start", diagnostic.span->start}, {"end", diagnostic.span->end}}
                                  : Json(nullptr);
    return doc;
}

Json to_json(const Diagnostics& diagnostics) {
    Json list = Json::array();
    for (const auto& d : diagnostics) list.push_back(to_json(d));
    return list;
}

Json to_json(const DiagramDocument& doc) {
    return Json{{"text", doc.text}, {"id_map", doc.id_map}, {"styles", doc.styles}};
}

Json to_json(const PathScore& score) {
    return Json{{"kind", "best_path"}, {"path", score.path}, {"total", score.total}};
}

Json to_json(const VoteResult& vote) {
    return Json{{"kind", "majority_vote"}, {"winner", vote.winner}, {"counts", vote.counts}, {"tie", vote.tie}};
}

Json to_json(const TraceStats& stats) {
    Json kinds = Json::object();
    for (const auto& [kind, n] : stats.kind_counts) kinds[std::string(to_string(kind))] = n;
    return Json{{"node_count", stats.node_count},
                {"edge_count", stats.edge_count},
                {"depth", stats.depth},
                {"max_width", stats.max_width},
                {"kind_counts", std::move(kinds)}};
}

Json to_json(const VisualizationConfig& config) {
    const auto& t = config.theme;
    return Json{{"direction", to_string(config.direction)},
                {"wrap_width", config.wrap_width},
                {"show_scores", config.show_scores},
                {"max_label_chars", config.max_label_chars},
                {"theme",
                 {{"question", t.question},
                  {"step", t.step},
                  {"reflection", t.reflection},
                  {"subquestion", t.subquestion},
                  {"final", t.final},
                  {"selected", t.selected}}}};
}

Json to_json(const MethodParams& params) {
    Json doc{{"num_chains", params.num_chains},
             {"beam_width", params.beam_width},
             {"max_depth", params.max_depth},
             {"max_refinements", params.max_refinements}};
    doc["num_subquestions_hint"] =
        params.num_subquestions_hint ? Json(*params.num_subquestions_hint) : Json(nullptr);
    return doc;
}

VisualizationConfig viz_config_from_json(const Json& doc) {
    auto fail = [](const std::string& message) -> void {
        throw Error(ErrorCode::invalid_config, "invalid viz_config: " + message);
    };
    VisualizationConfig config;
    if (doc.is_null()) return config;
    if (!doc.is_object()) fail("must be an object");
    for (const auto& [key, value] : doc.items()) {
        if (key == "direction") {
            if (!value.is_string()) fail("direction must be a string");
            const auto name = value.get<std::string>();
            if (name == "top_down") config.direction = Direction::top_down;
            else if (name == "left_right") config.direction = Direction::left_right;
            else fail("direction must be top_down or left_right");
        } else if (key == "wrap_width") {
            config.wrap_width = int_value(value, key, fail);
        } else if (key == "max_label_chars") {
            config.max_label_chars = int_value(value, key, fail);
        } else if (key == "show_scores") {
            if (!value.is_boolean()) fail("show_scores must be a boolean");
            config.show_scores = value.get<bool>();
        } else if (key == "theme") {
            if (!value.is_object()) fail("theme must be an object");
            for (const auto& [slot, colour] : value.items()) {
                std::string* target = slot == "question"      ? &config.theme.question
                                      : slot == "step"        ? &config.theme.step
                                      : slot == "reflection"  ? &config.theme.reflection
                                      : slot == "subquestion" ? &config.theme.subquestion
                                      : slot == "final"       ? &config.theme.final
                                      : slot == "selected"    ? &config.theme.selected
                                                              : nullptr;
                if (!target) fail("unknown theme slot \"" + slot + "\"");
                if (!colour.is_string()) fail("theme." + slot + " must be a string");
                *target = colour.get<std::string>();
            }
        } else {
            fail("unknown field \"" + key + "\"");
        }
    }
    config.validate();
    return config;
}

MethodParams method_params_from_json(const Json& doc) {
    auto fail = [](const std::string& message) -> void {
        throw Error(ErrorCode::invalid_params, "invalid method_params: " + message);
    };
    MethodParams params;
    if (doc.is_null()) return params;
    if (!doc.is_object()) fail("must be an object");
    for (const auto& [key, value] : doc.items()) {
        if (key == "num_chains") params.num_chains = int_value(value, key, fail);
        else if (key == "beam_width") params.beam_width = int_value(value, key, fail);
        else if (key == "max_depth") params.max_depth = int_value(value, key, fail);
        else if (key == "max_refinements") params.max_refinements = int_value(value, key, fail);
        else if (key == "num_subquestions_hint") {
            if (value.is_null()) params.num_subquestions_hint.reset();
            else params.num_subquestions_hint = int_value(value, key, fail);
        } else {
            fail("unknown field \"" + key + "\"");
        }
    }
    params.validate();
    return params;
}

Json params_schema(ReasoningMethod method) {
    const MethodParams defaults;
    auto integer = [](int fallback) { return Json{{"type", "integer"}, {"minimum", 1}, {"default", fallback}}; };
    Json schema = Json::object();
    switch (method) {
    case ReasoningMethod::chain_of_thoughts: break;
    case ReasoningMethod::self_refine: schema["max_refinements"] = integer(defaults.max_refinements); break;
    case ReasoningMethod::least_to_most:
        schema["num_subquestions_hint"] = Json{{"type", "integer"}, {"minimum", 1}, {"default", nullptr}};
        break;
    case ReasoningMethod::self_consistency: schema["num_chains"] = integer(defaults.num_chains); break;
    case ReasoningMethod::tree_of_thoughts: schema["max_depth"] = integer(defaults.max_depth); break;
    case ReasoningMethod::beam_search:
        schema["beam_width"] = integer(defaults.beam_width);
        schema["max_depth"] = integer(defaults.max_depth);
        schema["beam_width_times_max_depth_max"] = max_beam_cells;
        break;
    }
    return schema;
}

std::string dump(const Json& doc, int indent) {
    return doc.dump(indent, ' ', false, Json::error_handler_t::replace);
}

} // namespace reasongraph
