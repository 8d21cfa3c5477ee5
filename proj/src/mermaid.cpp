#include "reasongraph/mermaid.hpp"
#include "reasongraph/error.hpp"

#include <algorithm>
#include <array>
#include <charconv>
#include <set>
#include <unordered_set>

namespace reasongraph {

std::string_view to_string(Direction direction) noexcept {
    return direction == Direction::left_right ? "left_right" : "top_down";
}

namespace {

bool is_hex_colour(std::string_view value) {
    if (value.size() != 4 && value.size() != 7) return false;
    if (value[0] != '#') return false;
    return std::all_of(value.begin() + 1, value.end(), [](char c) {
        return (c >= '0' && c <= '9') || (c >= 'a' && c <= 'f') || (c >= 'A' && c <= 'F');
    });
}

bool is_continuation(char c) noexcept { return (static_cast<unsigned char>(c) & 0xC0) == 0x80; }

// Splits into code points; stray continuation bytes are kept with their predecessor.
std::vector<std::string_view> code_points(std::string_view text) {
    std::vector<std::string_view> out;
    std::size_t start = 0;
    for (std::size_t i = 1; i <= text.size(); ++i) {
        if (i == text.size() || !is_continuation(text[i])) {
            out.push_back(text.substr(start, i - start));
            start = i;
        }
    }
    return out;
}

constexpr std::string_view ellipsis = "\xE2\x80\xA6";

enum class NodeClass { question, subquestion, step, candidate, reflection, subanswer, final, selected };

constexpr std::array<NodeClass, 8> class_order = {
    NodeClass::question, NodeClass::subquestion, NodeClass::step,     NodeClass::candidate,
    NodeClass::reflection, NodeClass::subanswer, NodeClass::final,    NodeClass::selected,
};

std::string_view class_name(NodeClass c) {
    switch (c) {
    case NodeClass::question: return "question";
    case NodeClass::subquestion: return "subquestion";
    case NodeClass::step: return "step";
    case NodeClass::candidate: return "candidate";
    case NodeClass::reflection: return "reflection";
    case NodeClass::subanswer: return "subanswer";
    case NodeClass::final: return "final";
    case NodeClass::selected: return "selected";
    }
    return "step";
}

NodeClass class_for(NodeKind kind) {
    switch (kind) {
    case NodeKind::question: return NodeClass::question;
    case NodeKind::sub_question: return NodeClass::subquestion;
    case NodeKind::step:
    case NodeKind::attempt: return NodeClass::step;
    case NodeKind::candidate: return NodeClass::candidate;
    case NodeKind::reflection:
    case NodeKind::improvement: return NodeClass::reflection;
    case NodeKind::sub_answer: return NodeClass::subanswer;
    case NodeKind::final_answer: return NodeClass::final;
    }
    return NodeClass::step;
}

std::string class_definition(NodeClass c, const Theme& theme) {
    std::string fill;
    switch (c) {
    case NodeClass::question: fill = theme.question; break;
    case NodeClass::subquestion: fill = theme.subquestion; break;
    case NodeClass::step:
    case NodeClass::candidate: fill = theme.step; break;
    case NodeClass::reflection: fill = theme.reflection; break;
    case NodeClass::subanswer:
    case NodeClass::final: fill = theme.final; break;
    case NodeClass::selected: fill = theme.selected; break;
    }
    const std::string_view text_colour = c == NodeClass::selected ? "#ffffff" : "#111827";
    return "classDef " + std::string(class_name(c)) + " fill:" + fill + ",stroke:#475569,color:" +
           std::string(text_colour);
}

std::pair<std::string_view, std::string_view> shape_for(NodeKind kind) {
    switch (kind) {
    case NodeKind::question:
    case NodeKind::final_answer: return {"([\"", "\"])"};
    case NodeKind::reflection: return {"(\"", "\")"};
    default: return {"[\"", "\"]"};
    }
}

std::string format_score(double score) {
    std::array<char, 32> buffer{};
    auto [end, ec] = std::to_chars(buffer.data(), buffer.data() + buffer.size(), score, std::chars_format::fixed, 2);
    return "(score: " + std::string(buffer.data(), ec == std::errc{} ? end : buffer.data()) + ")";
}

} // namespace

void VisualizationConfig::validate() const {
    if (wrap_width < min_wrap_width || wrap_width > max_wrap_width) {
        throw Error(ErrorCode::invalid_config, "wrap_width must lie in [" + std::to_string(min_wrap_width) + ", " +
                                                   std::to_string(max_wrap_width) + "]");
    }
    if (max_label_chars < wrap_width) {
        throw Error(ErrorCode::invalid_config, "max_label_chars must be at least wrap_width");
    }
    const std::pair<const char*, const std::string*> colours[] = {
        {"question", &theme.question}, {"step", &theme.step},   {"reflection", &theme.reflection},
        {"subquestion", &theme.subquestion}, {"final", &theme.final}, {"selected", &theme.selected},
    };
    for (const auto& [slot, value] : colours) {
        if (!is_hex_colour(*value)) {
            throw Error(ErrorCode::invalid_config, std::string("theme.") + slot + " must be a #rgb or #rrggbb colour");
        }
    }
}

std::string escape_label(std::string_view label) {
    std::string out;
    out.reserve(label.size());
    for (char c : label) {
        switch (c) {
        case '"': out += "#quot;"; break;
        case '<': out += "#lt;"; break;
        case '>': out += "#gt;"; break;
        case '&': out += "#amp;"; break;
        case '\n': out += "<br/>"; break;
        case '\r': break;
        default: out.push_back(c);
        }
    }
    return out;
}

std::vector<std::string> wrap_lines(std::string_view label, int wrap_width, int max_label_chars) {
    const auto width = static_cast<std::size_t>(std::max(wrap_width, 1));
    auto points = code_points(label);
    const bool truncated = max_label_chars >= 0 && points.size() > static_cast<std::size_t>(max_label_chars);
    if (truncated) points.resize(static_cast<std::size_t>(max_label_chars));

    std::vector<std::string> lines;
    std::string current;
    std::size_t current_len = 0;
    auto flush = [&] {
        if (current_len == 0) return;
        lines.push_back(std::move(current));
        current.clear();
        current_len = 0;
    };

    std::vector<std::string_view> token;
    auto place = [&] {
        if (token.empty()) return;
        if (token.size() > width) {
            flush();
            for (std::size_t i = 0; i < token.size(); i += width) {
                flush();
                for (std::size_t k = i; k < std::min(token.size(), i + width); ++k) current += token[k];
                current_len = std::min(token.size(), i + width) - i;
            }
        } else if (current_len == 0) {
            for (auto cp : token) current += cp;
            current_len = token.size();
        } else if (current_len + 1 + token.size() <= width) {
            current.push_back(' ');
            for (auto cp : token) current += cp;
            current_len += 1 + token.size();
        } else {
            flush();
            for (auto cp : token) current += cp;
            current_len = token.size();
        }
        token.clear();
    };
    for (auto cp : points) {
        if (cp == " ") {
            place();
        } else {
            token.push_back(cp);
        }
    }
    place();
    if (truncated && !points.empty() && points.back() == " " && current_len > 0 && current_len + 1 <= width) {
        current.push_back(' ');
        ++current_len;
    }
    flush();

    if (truncated) {
        if (lines.empty()) lines.emplace_back();
        lines.back() += ellipsis;
    }
    return lines;
}

std::string wrap_label(std::string_view label, int wrap_width, int max_label_chars) {
    std::string out;
    for (const auto& line : wrap_lines(label, wrap_width, max_label_chars)) {
        if (!out.empty()) out += "<br/>";
        out += line;
    }
    return out;
}

DiagramDocument emit(const ReasoningTrace& trace, const VisualizationConfig& config,
                     std::span<const NodeId> highlight) {
    config.validate();
    const auto order = topological_order(trace);
    const std::unordered_set<std::string_view> highlighted(highlight.begin(), highlight.end());
    const auto& nodes = trace.nodes();

    DiagramDocument doc;
    std::string& out = doc.text;
    out.reserve(nodes.size() * 96);
    out += config.direction == Direction::left_right ? "flowchart LR\n" : "flowchart TD\n";

    std::array<std::vector<std::string>, class_order.size()> members;
    for (const auto& id : order) {
        const auto index = *trace.index_of(id);
        const auto& node = nodes[index];
        const std::string diagram_id = "N" + std::to_string(index);
        doc.id_map.emplace(diagram_id, node.id);

        auto lines = wrap_lines(node.label, config.wrap_width, config.max_label_chars);
        if (config.show_scores && node.score) lines.push_back(format_score(*node.score));
        std::string label;
        for (const auto& line : lines) {
            if (!label.empty()) label += "<br/>";
            label += escape_label(line);
        }

        const auto [open, close] = shape_for(node.kind);
        out += "    ";
        out += diagram_id;
        out += open;
        out += label;
        out += close;
        out += '\n';

        NodeClass cls = class_for(node.kind);
        if (highlighted.count(node.id) && node.kind != NodeKind::question && node.kind != NodeKind::final_answer) {
            cls = NodeClass::selected;
        }
        members[static_cast<std::size_t>(cls)].push_back(diagram_id);
    }

    for (const auto& edge : trace.edges()) {
        auto from = trace.index_of(edge.from);
        auto to = trace.index_of(edge.to);
        if (!from || !to) continue;
        out += "    N" + std::to_string(*from) + " --> N" + std::to_string(*to) + "\n";
    }

    for (auto cls : class_order) {
        if (members[static_cast<std::size_t>(cls)].empty()) continue;
        doc.styles.push_back(class_definition(cls, config.theme));
        out += "    " + doc.styles.back() + "\n";
    }
    for (auto cls : class_order) {
        const auto& ids = members[static_cast<std::size_t>(cls)];
        if (ids.empty()) continue;
        out += "    class ";
        for (std::size_t i = 0; i < ids.size(); ++i) {
            if (i) out += ',';
            out += ids[i];
        }
        out += ' ';
        out += class_name(cls);
        out += '\n';
    }
    return doc;
}

DiagramDocument emit(const ReasoningTrace& trace, const VisualizationConfig& config) {
    static const std::vector<NodeId> none;
    const auto& path = trace.selected_path() ? *trace.selected_path() : none;
    return emit(trace, config, std::span<const NodeId>(path));
}

namespace {

std::string_view trim(std::string_view s) {
    while (!s.empty() && (s.front() == ' ' || s.front() == '\t' || s.front() == '\r')) s.remove_prefix(1);
    while (!s.empty() && (s.back() == ' ' || s.back() == '\t' || s.back() == '\r')) s.remove_suffix(1);
    return s;
}

bool is_identifier(std::string_view s) {
    if (s.empty()) return false;
    auto start = [](char c) { return (c >= 'a' && c <= 'z') || (c >= 'A' && c <= 'Z') || c == '_'; };
    if (!start(s.front())) return false;
    return std::all_of(s.begin(), s.end(), [&](char c) { return start(c) || (c >= '0' && c <= '9'); });
}

std::size_t leading_identifier(std::string_view s) {
    std::size_t n = 0;
    while (n < s.size() && is_identifier(s.substr(0, n + 1))) ++n;
    return n;
}

bool brackets_balanced(std::string_view s) {
    std::vector<char> stack;
    bool quoted = false;
    for (char c : s) {
        if (c == '"') quoted = !quoted;
        if (quoted) continue;
        if (c == '(' || c == '[' || c == '{') stack.push_back(c);
        if (c == ')' || c == ']' || c == '}') {
            const char want = c == ')' ? '(' : c == ']' ? '[' : '{';
            if (stack.empty() || stack.back() != want) return false;
            stack.pop_back();
        }
    }
    return stack.empty() && !quoted;
}

} // namespace

Diagnostics validate_diagram(const DiagramDocument& doc) {
    Diagnostics out;
    std::vector<std::pair<std::string_view, Span>> lines;
    {
        std::string_view text = doc.text;
        std::size_t start = 0;
        while (start <= text.size()) {
            auto end = text.find('\n', start);
            if (end == std::string_view::npos) end = text.size();
            lines.emplace_back(text.substr(start, end - start), Span{start, end});
            if (end == text.size()) break;
            start = end + 1;
        }
    }

    std::size_t first = 0;
    while (first < lines.size() && trim(lines[first].first).empty()) ++first;
    static const std::set<std::string_view> headers{"flowchart TD", "flowchart LR", "flowchart TB",
                                                    "flowchart BT", "flowchart RL"};
    if (first == lines.size() || !headers.count(trim(lines[first].first))) {
        out.push_back(Diagnostic::error(DiagnosticCode::missing_header, "diagram must start with a flowchart header"));
        if (first < lines.size() && trim(lines[first].first).rfind("flowchart", 0) != 0) --first;
    }

    std::set<std::string, std::less<>> nodes;
    std::set<std::string, std::less<>> classes;
    std::vector<std::pair<std::string, Span>> node_refs;
    std::vector<std::pair<std::string, Span>> class_refs;

    for (std::size_t i = first + 1; i < lines.size(); ++i) {
        const auto line = trim(lines[i].first);
        const auto span = lines[i].second;
        if (line.empty() || line.rfind("%%", 0) == 0) continue;
        auto invalid = [&](std::string why) {
            out.push_back(Diagnostic::error(DiagnosticCode::invalid_statement, std::move(why), {}, span));
        };

        if (line.rfind("classDef ", 0) == 0) {
            auto rest = trim(line.substr(9));
            auto gap = rest.find(' ');
            if (gap == std::string_view::npos || !is_identifier(rest.substr(0, gap)) || trim(rest.substr(gap)).empty()) {
                invalid("malformed classDef statement");
                continue;
            }
            classes.emplace(rest.substr(0, gap));
            continue;
        }
        if (line.rfind("class ", 0) == 0) {
            auto rest = trim(line.substr(6));
            auto gap = rest.rfind(' ');
            if (gap == std::string_view::npos) {
                invalid("malformed class statement");
                continue;
            }
            auto name = trim(rest.substr(gap + 1));
            auto ids = trim(rest.substr(0, gap));
            bool ok = is_identifier(name);
            std::size_t pos = 0;
            while (ok && pos <= ids.size()) {
                auto comma = ids.find(',', pos);
                if (comma == std::string_view::npos) comma = ids.size();
                auto id = trim(ids.substr(pos, comma - pos));
                ok = is_identifier(id);
                if (ok) node_refs.emplace_back(std::string(id), span);
                pos = comma + 1;
            }
            if (!ok) {
                invalid("malformed class statement");
                continue;
            }
            class_refs.emplace_back(std::string(name), span);
            continue;
        }
        if (auto arrow = line.find("-->"); arrow != std::string_view::npos) {
            auto from = trim(line.substr(0, arrow));
            auto to = trim(line.substr(arrow + 3));
            if (!is_identifier(from) || !is_identifier(to)) {
                invalid("malformed edge statement");
                continue;
            }
            node_refs.emplace_back(std::string(from), span);
            node_refs.emplace_back(std::string(to), span);
            continue;
        }

        const auto id_len = leading_identifier(line);
        if (id_len == 0) {
            invalid("unrecognized statement");
            continue;
        }
        const auto id = line.substr(0, id_len);
        const auto shape = line.substr(id_len);
        if (!brackets_balanced(shape)) {
            out.push_back(Diagnostic::error(DiagnosticCode::unbalanced_brackets,
                                            "node shape brackets are unbalanced", std::string(id), span));
            continue;
        }
        static constexpr std::pair<std::string_view, std::string_view> shapes[] = {
            {"([\"", "\"])"}, {"(\"", "\")"}, {"[\"", "\"]"}};
        bool matched = false;
        for (const auto& [open, close] : shapes) {
            if (shape.size() < open.size() + close.size()) continue;
            if (shape.substr(0, open.size()) != open || shape.substr(shape.size() - close.size()) != close) continue;
            const auto label = shape.substr(open.size(), shape.size() - open.size() - close.size());
            matched = label.find('"') == std::string_view::npos;
            break;
        }
        if (!matched) {
            invalid("unsupported node shape or unescaped quote in label");
            continue;
        }
        if (!nodes.emplace(id).second) {
            out.push_back(Diagnostic::error(DiagnosticCode::duplicate_node, "node declared twice", std::string(id), span));
        }
    }

    for (const auto& [id, span] : node_refs) {
        if (!nodes.count(id)) {
            out.push_back(Diagnostic::error(DiagnosticCode::undeclared_node,
                                            "statement references undeclared node " + id, id, span));
        }
    }
    for (const auto& [name, span] : class_refs) {
        if (!classes.count(name)) {
            out.push_back(Diagnostic::error(DiagnosticCode::undeclared_class,
                                            "class statement references undeclared class " + name, name, span));
        }
    }
    for (const auto& [diagram_id, _] : doc.id_map) {
        if (!nodes.count(diagram_id)) {
            out.push_back(Diagnostic::error(DiagnosticCode::undeclared_node,
                                            "id map names a node the text never declares", diagram_id));
        }
    }
    return out;
}

} // namespace reasongraph
