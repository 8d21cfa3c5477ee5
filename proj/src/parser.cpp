#include "reasongraph/parser.hpp"
#include "reasongraph/error.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <unordered_map>

namespace reasongraph {

std::vector<TagRule> scan_rules(const MethodGrammar& grammar) {
    std::vector<TagRule> rules;
    rules.reserve(grammar.tags.size());
    for (const auto& tag : grammar.tags) rules.push_back({tag.name, tag.parent, tag.container});
    return rules;
}

Extraction extract_elements(const RawModelOutput& raw) {
    return scan_tags(raw.text, scan_rules(grammar_for(raw.method)));
}

namespace {

constexpr int root_parent = -1;

bool equals_ignore_case(std::string_view a, std::string_view b) {
    if (a.size() != b.size()) return false;
    for (std::size_t i = 0; i < a.size(); ++i) {
        auto lower = [](char c) { return (c >= 'A' && c <= 'Z') ? static_cast<char>(c + 32) : c; };
        if (lower(a[i]) != lower(b[i])) return false;
    }
    return true;
}

std::optional<double> parse_decimal(std::string_view text) {
    double value = 0.0;
    auto [ptr, ec] = std::from_chars(text.data(), text.data() + text.size(), value);
    if (ec != std::errc{} || ptr != text.data() + text.size() || !std::isfinite(value)) return std::nullopt;
    return value;
}

std::optional<int> parse_level(std::string_view text) {
    int value = 0;
    auto [ptr, ec] = std::from_chars(text.data(), text.data() + text.size(), value);
    if (ec != std::errc{} || ptr != text.data() + text.size() || value < 0) return std::nullopt;
    return value;
}

struct TreeEntry {
    const Element* element;
    std::string model_id;
    std::optional<std::string> parent_ref;
    std::optional<int> declared_level;
    std::size_t node; // builder index
    int parent = root_parent;
};

class Assembler {
public:
    Assembler(const std::vector<Element>& elements, const RawModelOutput& raw)
        : elements_(elements), raw_(raw), grammar_(grammar_for(raw.method)), builder_(raw.method) {}

    Assembly run() {
        const bool tree = is_tree_method(raw_.method);
        auto question_label = canonical_label(raw_.question);
        if (question_label.empty()) question_label = placeholder_question;
        question_ = builder_.add_node(NodeKind::question, question_label,
                                      {std::nullopt, tree ? std::optional<int>(0) : std::nullopt, std::nullopt});
        select_final();

        switch (raw_.method) {
        case ReasoningMethod::chain_of_thoughts:
        case ReasoningMethod::self_refine:
        case ReasoningMethod::least_to_most:
            assemble_linear();
            break;
        case ReasoningMethod::self_consistency:
            assemble_chains();
            break;
        case ReasoningMethod::tree_of_thoughts:
        case ReasoningMethod::beam_search:
            assemble_tree();
            break;
        }
        return Assembly{std::move(builder_).build(), std::move(diagnostics_)};
    }

private:
    void warn(DiagnosticCode code, std::string message, const Element& element, std::string subject = {}) {
        diagnostics_.push_back(Diagnostic::warning(code, std::move(message), std::move(subject), element.span));
    }

    std::optional<std::string> label_of(const Element& element) {
        auto label = canonical_label(element.text);
        if (label.empty()) {
            warn(DiagnosticCode::empty_label, "<" + element.name + "> has no content; element ignored", element);
            return std::nullopt;
        }
        return label;
    }

    void check_required_attributes(const Element& element) {
        const auto* tag = grammar_.find(element.name);
        if (!tag) return;
        for (const auto& spec : tag->attributes) {
            // Missing beam scores are reported by trace validation.
            if (!spec.required || spec.name == "score") continue;
            if (!element.attribute(spec.name)) {
                warn(DiagnosticCode::missing_attribute,
                     "<" + element.name + "> is missing the " + spec.name + " attribute", element);
            }
        }
    }

    void select_final() {
        for (const auto& element : elements_) {
            if (element.name != "final_answer") continue;
            if (final_element_) {
                warn(DiagnosticCode::duplicate_final_answer, "extra <final_answer> ignored", element);
                continue;
            }
            if (auto label = label_of(element)) {
                final_element_ = &element;
                final_label_ = std::move(*label);
            }
        }
        if (final_element_ && &elements_.back() != final_element_) {
            for (auto it = elements_.rbegin(); it != elements_.rend() && &*it != final_element_; ++it) {
                if (it->name != "final_answer" && it->name != "selected_path") {
                    warn(DiagnosticCode::unexpected_order, "<final_answer> precedes other reasoning elements",
                         *final_element_);
                    break;
                }
            }
        }
    }

    NodeId add_final(const NodeId& parent, std::optional<int> level = std::nullopt) {
        std::string label = final_label_;
        if (!final_element_) {
            diagnostics_.push_back(Diagnostic::warning(DiagnosticCode::missing_final_answer,
                                                       "response has no <final_answer>; placeholder added"));
            label = missing_final_label;
        }
        auto id = builder_.add_node(NodeKind::final_answer, label, {std::nullopt, level, std::nullopt});
        builder_.add_edge(parent, id);
        return id;
    }

    void assemble_linear() {
        enum class Expect { any, attempt, reflection, improvement, sub_question, sub_answer };
        Expect expect = Expect::any;
        if (raw_.method == ReasoningMethod::self_refine) expect = Expect::attempt;
        if (raw_.method == ReasoningMethod::least_to_most) expect = Expect::sub_question;

        auto matches = [](Expect e, NodeKind kind) {
            switch (e) {
            case Expect::any: return true;
            case Expect::attempt: return kind == NodeKind::attempt;
            case Expect::reflection: return kind == NodeKind::reflection;
            case Expect::improvement: return kind == NodeKind::improvement;
            case Expect::sub_question: return kind == NodeKind::sub_question;
            case Expect::sub_answer: return kind == NodeKind::sub_answer;
            }
            return true;
        };
        auto after = [&](NodeKind kind) {
            switch (kind) {
            case NodeKind::attempt:
            case NodeKind::improvement: return Expect::reflection;
            case NodeKind::reflection: return Expect::improvement;
            case NodeKind::sub_question: return Expect::sub_answer;
            case NodeKind::sub_answer: return Expect::sub_question;
            default: return Expect::any;
            }
        };

        NodeId previous = question_;
        for (const auto& element : elements_) {
            const auto* tag = grammar_.find(element.name);
            if (!tag || !tag->produces || *tag->produces == NodeKind::final_answer) continue;
            auto label = label_of(element);
            if (!label) continue;
            const NodeKind kind = *tag->produces;
            if (!matches(expect, kind)) {
                warn(DiagnosticCode::unexpected_order, "<" + element.name + "> is out of the expected order",
                     element);
            }
            if (expect != Expect::any) expect = after(kind);
            auto id = builder_.add_node(kind, *label);
            builder_.add_edge(previous, id);
            previous = id;
        }
        add_final(previous);
    }

    void assemble_chains() {
        std::vector<NodeId> chain_ends;
        int ordinal = 0;
        for (const auto& element : elements_) {
            if (element.name != "chain") continue;
            check_required_attributes(element);
            std::vector<std::pair<NodeKind, std::string>> members;
            bool answered = false;
            for (const auto& child : element.children) {
                auto label = label_of(child);
                if (!label) continue;
                const bool is_answer = child.name == "answer";
                if (answered) {
                    warn(DiagnosticCode::unexpected_order,
                         is_answer ? "chain has more than one <answer>" : "<step> follows the chain's <answer>",
                         child);
                }
                answered = answered || is_answer;
                members.emplace_back(is_answer ? NodeKind::candidate : NodeKind::step, std::move(*label));
            }
            if (members.empty()) {
                warn(DiagnosticCode::empty_chain, "<chain> contains no usable elements; ignored", element);
                continue;
            }
            if (!answered) {
                warn(DiagnosticCode::missing_chain_answer, "<chain> has no <answer>", element);
            }
            const int chain_index = ordinal++;
            NodeId previous = question_;
            for (auto& [kind, label] : members) {
                auto id = builder_.add_node(kind, label, {std::nullopt, std::nullopt, chain_index});
                builder_.add_edge(previous, id);
                previous = id;
            }
            chain_ends.push_back(previous);
        }
        if (chain_ends.empty()) {
            add_final(question_);
            return;
        }
        auto final_id = add_final(chain_ends.front());
        for (std::size_t i = 1; i < chain_ends.size(); ++i) builder_.add_edge(chain_ends[i], final_id);
    }

    void assemble_tree() {
        const bool beam = raw_.method == ReasoningMethod::beam_search;
        std::vector<TreeEntry> entries;
        std::unordered_map<std::string, std::size_t> by_model_id;

        for (const auto& element : elements_) {
            if (element.name != "node") continue;
            auto label = label_of(element);
            if (!label) continue;
            check_required_attributes(element);

            TreeEntry entry{&element, {}, {}, {}, 0, root_parent};
            if (const auto* id = element.attribute("id"); id && !canonical_label(*id).empty()) {
                entry.model_id = canonical_label(*id);
                if (by_model_id.count(entry.model_id)) {
                    std::string renamed;
                    for (int suffix = 2;; ++suffix) {
                        renamed = entry.model_id + "_" + std::to_string(suffix);
                        if (!by_model_id.count(renamed)) break;
                    }
                    warn(DiagnosticCode::duplicate_node_id,
                         "node id '" + entry.model_id + "' repeats; renamed to '" + renamed + "'", element);
                    entry.model_id = renamed;
                }
            }
            if (const auto* parent = element.attribute("parent")) entry.parent_ref = canonical_label(*parent);

            std::optional<double> score;
            if (const auto* text = element.attribute("score")) {
                score = parse_decimal(canonical_label(*text));
                if (!score) {
                    warn(DiagnosticCode::invalid_attribute, "score '" + *text + "' is not a number", element);
                } else if (*score < 0.0 || *score > 1.0) {
                    warn(DiagnosticCode::score_clamped, "score " + *text + " clamped into [0,1]", element);
                    score = std::clamp(*score, 0.0, 1.0);
                }
            }
            if (beam) {
                if (const auto* text = element.attribute("level")) {
                    entry.declared_level = parse_level(canonical_label(*text));
                    if (!entry.declared_level) {
                        warn(DiagnosticCode::invalid_attribute, "level '" + *text + "' is not a level", element);
                    }
                }
            }

            entry.node = builder_.node_count();
            builder_.add_node(NodeKind::candidate, *label, {score, std::nullopt, std::nullopt});
            if (!entry.model_id.empty()) by_model_id.emplace(entry.model_id, entries.size());
            entries.push_back(std::move(entry));
        }

        auto resolve = [&](const std::string& ref) -> std::optional<int> {
            if (equals_ignore_case(ref, "root")) return root_parent;
            auto it = by_model_id.find(ref);
            if (it == by_model_id.end()) return std::nullopt;
            return static_cast<int>(it->second);
        };

        for (auto& entry : entries) {
            if (!entry.parent_ref) continue;
            if (auto parent = resolve(*entry.parent_ref)) {
                entry.parent = *parent;
            } else {
                diagnostics_.push_back(Diagnostic::warning(
                    DiagnosticCode::orphan_node,
                    "parent '" + *entry.parent_ref + "' does not exist; node attached to the question",
                    builder_.node(entry.node).id, entry.element->span));
            }
        }

        break_parent_cycles(entries);

        std::vector<int> depth(entries.size(), -1);
        for (std::size_t i = 0; i < entries.size(); ++i) {
            std::vector<std::size_t> chain;
            int current = static_cast<int>(i);
            while (current != root_parent && depth[current] < 0) {
                chain.push_back(static_cast<std::size_t>(current));
                current = entries[current].parent;
            }
            int base = current == root_parent ? 0 : depth[current];
            for (auto it = chain.rbegin(); it != chain.rend(); ++it) depth[*it] = ++base;
        }

        std::vector<bool> has_children(entries.size(), false);
        for (std::size_t i = 0; i < entries.size(); ++i) {
            auto& entry = entries[i];
            const int level = entry.declared_level.value_or(depth[i]);
            builder_.node(entry.node).level = level;
            const NodeId parent_id =
                entry.parent == root_parent ? question_ : builder_.node(entries[entry.parent].node).id;
            if (entry.parent != root_parent) has_children[entry.parent] = true;
            builder_.add_edge(parent_id, builder_.node(entry.node).id);
        }

        std::vector<int> selected;
        if (beam) selected = read_selected_path(entries, resolve);

        // Where the final answer hangs: explicit parent, then the declared
        // path's end, then the last leaf in document order.
        std::optional<int> final_parent;
        if (final_element_) {
            if (const auto* parent = final_element_->attribute("parent")) {
                final_parent = resolve(canonical_label(*parent));
                if (!final_parent) {
                    warn(DiagnosticCode::orphan_node,
                         "final answer parent '" + *parent + "' does not exist; attached by default rule",
                         *final_element_);
                }
            }
        }
        if (!final_parent && !selected.empty()) final_parent = selected.back();
        if (!final_parent) {
            final_parent = root_parent;
            for (std::size_t i = entries.size(); i-- > 0;) {
                if (!has_children[i]) {
                    final_parent = static_cast<int>(i);
                    break;
                }
            }
        }

        const NodeId parent_id =
            *final_parent == root_parent ? question_ : builder_.node(entries[*final_parent].node).id;
        const int parent_depth = *final_parent == root_parent ? 0 : depth[*final_parent];
        auto final_id = add_final(parent_id, parent_depth + 1);

        if (!selected.empty()) {
            if (selected.back() != *final_parent) {
                diagnostics_.push_back(Diagnostic::warning(
                    DiagnosticCode::broken_selected_path,
                    "final answer does not follow the selected path; path ignored"));
                return;
            }
            std::vector<NodeId> path{question_};
            for (int index : selected) path.push_back(builder_.node(entries[index].node).id);
            path.push_back(final_id);
            builder_.set_selected_path(std::move(path));
        }
    }

    void break_parent_cycles(std::vector<TreeEntry>& entries) {
        enum class State { fresh, active, done };
        std::vector<State> state(entries.size(), State::fresh);
        for (std::size_t start = 0; start < entries.size(); ++start) {
            std::vector<std::size_t> walked;
            int current = static_cast<int>(start);
            while (current != root_parent && state[current] == State::fresh) {
                state[current] = State::active;
                walked.push_back(static_cast<std::size_t>(current));
                current = entries[current].parent;
            }
            if (current != root_parent && state[current] == State::active) {
                auto& entry = entries[current];
                diagnostics_.push_back(Diagnostic::warning(
                    DiagnosticCode::parent_cycle,
                    "parent references form a cycle; node attached to the question",
                    builder_.node(entry.node).id, entry.element->span));
                entry.parent = root_parent;
            }
            for (auto index : walked) state[index] = State::done;
        }
    }

    template <class Resolve>
    std::vector<int> read_selected_path(const std::vector<TreeEntry>& entries, Resolve&& resolve) {
        const Element* element = nullptr;
        for (const auto& candidate : elements_) {
            if (candidate.name != "selected_path") continue;
            if (element) {
                warn(DiagnosticCode::unexpected_order, "extra <selected_path> ignored", candidate);
                continue;
            }
            element = &candidate;
        }
        if (!element) return {};

        std::string text = element->text;
        for (std::size_t pos; (pos = text.find("->")) != std::string::npos;) text.replace(pos, 2, ",");
        std::vector<int> path;
        std::string token;
        auto flush = [&] {
            if (token.empty()) return;
            auto index = resolve(token);
            if (!index || *index == root_parent) {
                if (!index) {
                    warn(DiagnosticCode::unknown_path_node, "selected path names unknown node '" + token + "'",
                         *element);
                }
            } else {
                path.push_back(*index);
            }
            token.clear();
        };
        for (char c : text) {
            if (c == ',' || c == ';' || c == ' ' || c == '\t' || c == '\n' || c == '\r') {
                flush();
            } else {
                token.push_back(c);
            }
        }
        flush();
        if (path.empty()) return {};

        bool connected = entries[path.front()].parent == root_parent;
        for (std::size_t i = 1; i < path.size() && connected; ++i) {
            connected = entries[path[i]].parent == path[i - 1];
        }
        if (!connected) {
            warn(DiagnosticCode::broken_selected_path,
                 "selected path does not follow parent links from the question; path ignored", *element);
            return {};
        }
        return path;
    }

    const std::vector<Element>& elements_;
    const RawModelOutput& raw_;
    const MethodGrammar& grammar_;
    TraceBuilder builder_;
    Diagnostics diagnostics_;
    NodeId question_;
    const Element* final_element_ = nullptr;
    std::string final_label_;
};

} // namespace

Assembly assemble_trace(const std::vector<Element>& elements, const RawModelOutput& raw) {
    if (elements.empty()) {
        throw Error(ErrorCode::invalid_trace, "cannot assemble a trace from zero elements");
    }
    return Assembler(elements, raw).run();
}

ParseResult parse(const RawModelOutput& raw) {
    auto extraction = extract_elements(raw);
    ParseResult result;
    result.diagnostics = std::move(extraction.diagnostics);
    if (extraction.elements.empty()) {
        result.diagnostics.push_back(Diagnostic::error(
            DiagnosticCode::no_elements,
            "no " + std::string(to_string(raw.method)) + " elements found in the response"));
        return result;
    }
    auto assembly = assemble_trace(extraction.elements, raw);
    result.diagnostics.insert(result.diagnostics.end(), assembly.diagnostics.begin(), assembly.diagnostics.end());
    auto structural = validate_trace(assembly.trace);
    result.diagnostics.insert(result.diagnostics.end(), structural.begin(), structural.end());
    result.trace = std::move(assembly.trace);
    return result;
}

} // namespace reasongraph
