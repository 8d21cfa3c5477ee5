#include "reasongraph/synthetic.hpp"
#include "reasongraph/grammar.hpp"
#include "reasongraph/tag_scanner.hpp"

#include <algorithm>
#include <array>
#include <charconv>
#include <map>

namespace reasongraph {

namespace {

constexpr std::array<std::string_view, 32> words = {
    "add",   "the",     "two",   "numbers", "carry", "one",   "check",    "result", "x",     "=",     "3",
    "&",     "<",       ">",     "y",       "2",     "\"so\"", "it's",   "café",   "π",     "√2",    "sum",
    "divide", "by",     "zero?", "maybe",   "then",  "total", "is",       "42.",    "a<b",   "x&y",
};

constexpr std::array<std::string_view, 7> answers = {"4", "5", "Paris", "paris.", "42", "x = 7", "no solution"};

constexpr std::array<std::string_view, 12> filler = {
    "Let me think about this carefully.",
    "Okay, so 3 > 2 & that settles it.",
    "Here is my reasoning:",
    "**Next**",
    "Note: the values may vary.",
    "Moving on.",
    "```",
    "- bullet point",
    "Hmm, interesting (really).",
    "Q: what next? A: keep going.",
    "1) first 2) second",
    "That's it for now...",
};

int uniform(std::mt19937_64& rng, int lo, int hi) { return std::uniform_int_distribution<int>(lo, hi)(rng); }

bool coin(std::mt19937_64& rng, double p = 0.5) { return std::bernoulli_distribution(p)(rng); }

std::string random_label(std::mt19937_64& rng) {
    const int n = uniform(rng, 1, 8);
    std::string label;
    for (int i = 0; i < n; ++i) {
        if (i) label.push_back(' ');
        label += words[static_cast<std::size_t>(uniform(rng, 0, static_cast<int>(words.size()) - 1))];
    }
    return label;
}

double random_score(std::mt19937_64& rng) { return uniform(rng, 0, 100) / 100.0; }

std::string format_score(double score) {
    std::array<char, 32> buffer{};
    auto [end, ec] = std::to_chars(buffer.data(), buffer.data() + buffer.size(), score);
    return std::string(buffer.data(), end);
}

std::string attribute_value(std::string_view value) {
    std::string out;
    for (char c : encode_entities(value)) {
        if (c == '"') out += "&quot;";
        else out.push_back(c);
    }
    return out;
}

ReasoningTrace linear_trace(ReasoningMethod method, std::mt19937_64& rng, const SyntheticOptions& options) {
    TraceBuilder builder(method);
    auto previous = builder.add_node(NodeKind::question, random_label(rng));
    auto append = [&](NodeKind kind) {
        auto id = builder.add_node(kind, random_label(rng));
        builder.add_edge(previous, id);
        previous = id;
    };
    const int cap = std::max(1, options.max_steps);
    switch (method) {
    case ReasoningMethod::self_refine: {
        append(NodeKind::attempt);
        for (int i = uniform(rng, 0, std::min(cap, 3)); i > 0; --i) {
            append(NodeKind::reflection);
            append(NodeKind::improvement);
        }
        break;
    }
    case ReasoningMethod::least_to_most:
        for (int i = uniform(rng, 1, std::min(cap, 4)); i > 0; --i) {
            append(NodeKind::sub_question);
            append(NodeKind::sub_answer);
        }
        break;
    default:
        for (int i = uniform(rng, 1, cap); i > 0; --i) append(NodeKind::step);
        break;
    }
    append(NodeKind::final_answer);
    return std::move(builder).build();
}

ReasoningTrace chains_trace(std::mt19937_64& rng, const SyntheticOptions& options) {
    TraceBuilder builder(ReasoningMethod::self_consistency);
    const auto question = builder.add_node(NodeKind::question, random_label(rng));
    std::vector<NodeId> ends;
    std::map<std::string, int> tally;
    std::string leader;
    const int chains = uniform(rng, 1, std::max(1, options.max_chains));
    for (int c = 0; c < chains; ++c) {
        NodeId previous = question;
        for (int i = uniform(rng, 0, 3); i > 0; --i) {
            auto id = builder.add_node(NodeKind::step, random_label(rng), {std::nullopt, std::nullopt, c});
            builder.add_edge(previous, id);
            previous = id;
        }
        const std::string answer(answers[static_cast<std::size_t>(uniform(rng, 0, answers.size() - 1))]);
        auto id = builder.add_node(NodeKind::candidate, answer, {std::nullopt, std::nullopt, c});
        builder.add_edge(previous, id);
        ends.push_back(id);
        if (++tally[answer] > tally[leader]) leader = answer;
    }
    const auto final_id = builder.add_node(NodeKind::final_answer, leader);
    for (const auto& end : ends) builder.add_edge(end, final_id);
    return std::move(builder).build();
}

ReasoningTrace thoughts_trace(std::mt19937_64& rng, const SyntheticOptions& options) {
    TraceBuilder builder(ReasoningMethod::tree_of_thoughts);
    const auto question = builder.add_node(NodeKind::question, random_label(rng), {std::nullopt, 0, std::nullopt});
    enum class Scores { none, all, some };
    const auto scores = static_cast<Scores>(uniform(rng, 0, 2));

    struct Slot {
        NodeId id;
        int level;
        int children = 0;
    };
    std::vector<Slot> slots{{question, 0}};
    const int count = uniform(rng, 1, std::max(1, options.max_tree_nodes));
    for (int i = 0; i < count; ++i) {
        std::vector<std::size_t> open;
        for (std::size_t s = 0; s < slots.size(); ++s) {
            if (slots[s].level < options.max_depth && slots[s].children < options.max_width) open.push_back(s);
        }
        if (open.empty()) break;
        const auto parent = open[static_cast<std::size_t>(uniform(rng, 0, static_cast<int>(open.size()) - 1))];
        std::optional<double> score;
        if (scores == Scores::all || (scores == Scores::some && coin(rng))) score = random_score(rng);
        const int level = slots[parent].level + 1;
        auto id = builder.add_node(NodeKind::candidate, random_label(rng), {score, level, std::nullopt});
        builder.add_edge(slots[parent].id, id);
        ++slots[parent].children;
        slots.push_back({id, level});
    }
    std::vector<std::size_t> leaves;
    for (std::size_t s = 1; s < slots.size(); ++s) {
        if (slots[s].children == 0) leaves.push_back(s);
    }
    const auto& parent = slots[leaves[static_cast<std::size_t>(uniform(rng, 0, static_cast<int>(leaves.size()) - 1))]];
    auto final_id = builder.add_node(NodeKind::final_answer, random_label(rng), {std::nullopt, parent.level + 1, std::nullopt});
    builder.add_edge(parent.id, final_id);
    return std::move(builder).build();
}

ReasoningTrace beam_trace(std::mt19937_64& rng, const SyntheticOptions& options) {
    TraceBuilder builder(ReasoningMethod::beam_search);
    const auto question = builder.add_node(NodeKind::question, random_label(rng), {std::nullopt, 0, std::nullopt});
    const int depth = uniform(rng, 1, std::max(1, options.max_depth));

    struct Slot {
        NodeId id;
        std::vector<std::size_t> children;
    };
    std::vector<Slot> slots{{question, {}}};
    std::vector<std::size_t> frontier{0};
    for (int level = 1; level <= depth; ++level) {
        const int width = uniform(rng, 1, std::max(1, options.max_width));
        std::vector<std::size_t> next;
        for (auto parent : frontier) {
            for (int k = 0; k < width; ++k) {
                auto id = builder.add_node(NodeKind::candidate, random_label(rng),
                                           {random_score(rng), level, std::nullopt});
                builder.add_edge(slots[parent].id, id);
                slots[parent].children.push_back(slots.size());
                next.push_back(slots.size());
                slots.push_back({id, {}});
            }
        }
        frontier = std::move(next);
    }

    std::vector<NodeId> walk;
    std::size_t at = 0;
    while (!slots[at].children.empty()) {
        const auto& children = slots[at].children;
        at = children[static_cast<std::size_t>(uniform(rng, 0, static_cast<int>(children.size()) - 1))];
        walk.push_back(slots[at].id);
    }
    auto final_id = builder.add_node(NodeKind::final_answer, random_label(rng), {std::nullopt, depth + 1, std::nullopt});
    builder.add_edge(walk.back(), final_id);
    if (coin(rng, 2.0 / 3.0)) {
        std::vector<NodeId> path{question};
        path.insert(path.end(), walk.begin(), walk.end());
        path.push_back(final_id);
        builder.set_selected_path(std::move(path));
    }
    return std::move(builder).build();
}

} // namespace

ReasoningTrace random_trace(ReasoningMethod method, std::mt19937_64& rng, const SyntheticOptions& options) {
    switch (method) {
    case ReasoningMethod::self_consistency: return chains_trace(rng, options);
    case ReasoningMethod::tree_of_thoughts: return thoughts_trace(rng, options);
    case ReasoningMethod::beam_search: return beam_trace(rng, options);
    default: return linear_trace(method, rng, options);
    }
}

std::string random_prose(std::mt19937_64& rng) {
    std::string out;
    for (int i = uniform(rng, 1, 3); i > 0; --i) {
        if (!out.empty()) out += coin(rng) ? "\n" : " ";
        out += filler[static_cast<std::size_t>(uniform(rng, 0, static_cast<int>(filler.size()) - 1))];
    }
    return out;
}

std::string print_trace(const ReasoningTrace& trace, std::mt19937_64* prose) {
    const auto& grammar = grammar_for(trace.method());
    const auto& nodes = trace.nodes();
    std::string out;
    auto separate = [&] {
        if (prose) {
            out += random_prose(*prose);
            out.push_back('\n');
        }
    };
    auto leaf = [&](std::string_view tag, std::string_view attributes, std::string_view label) {
        separate();
        out += '<';
        out += tag;
        out += attributes;
        out += '>';
        out += encode_entities(label);
        out += "</";
        out += tag;
        out += ">\n";
    };
    auto parent_ref = [&](std::size_t index) -> std::string {
        const auto& preds = trace.predecessors(index);
        if (preds.empty() || nodes[preds.front()].kind == NodeKind::question) return "root";
        return nodes[preds.front()].id;
    };

    std::optional<std::size_t> final_index;
    for (std::size_t i = 0; i < nodes.size(); ++i) {
        if (nodes[i].kind == NodeKind::final_answer) final_index = i;
    }

    switch (trace.method()) {
    case ReasoningMethod::chain_of_thoughts:
    case ReasoningMethod::self_refine:
    case ReasoningMethod::least_to_most:
        for (const auto& id : topological_order(trace)) {
            const auto* node = trace.find(id);
            if (node->kind == NodeKind::question || node->kind == NodeKind::final_answer) continue;
            leaf(grammar.tag_for(node->kind)->name, {}, node->label);
        }
        break;
    case ReasoningMethod::self_consistency: {
        std::map<int, std::vector<const TraceNode*>> chains;
        for (const auto& id : topological_order(trace)) {
            const auto* node = trace.find(id);
            if (node->chain_index) chains[*node->chain_index].push_back(node);
        }
        for (const auto& [index, members] : chains) {
            separate();
            out += "<chain index=\"" + std::to_string(index + 1) + "\">\n";
            for (const auto* node : members) {
                leaf(node->kind == NodeKind::candidate ? "answer" : "step", {}, node->label);
            }
            out += "</chain>\n";
        }
        break;
    }
    case ReasoningMethod::tree_of_thoughts:
    case ReasoningMethod::beam_search: {
        const bool beam = trace.method() == ReasoningMethod::beam_search;
        for (std::size_t i = 0; i < nodes.size(); ++i) {
            const auto& node = nodes[i];
            if (node.kind != NodeKind::candidate) continue;
            std::string attributes = " id=\"" + attribute_value(node.id) + "\" parent=\"" +
                                     attribute_value(parent_ref(i)) + "\"";
            if (beam && node.level) attributes += " level=\"" + std::to_string(*node.level) + "\"";
            if (node.score) attributes += " score=\"" + format_score(*node.score) + "\"";
            leaf("node", attributes, node.label);
        }
        if (beam && trace.selected_path()) {
            std::string path;
            for (const auto& id : *trace.selected_path()) {
                const auto* node = trace.find(id);
                if (!node || node->kind != NodeKind::candidate) continue;
                if (!path.empty()) path += ", ";
                path += id;
            }
            leaf("selected_path", {}, path);
        }
        break;
    }
    }

    if (final_index) {
        std::string attributes;
        if (is_tree_method(trace.method())) attributes = " parent=\"" + attribute_value(parent_ref(*final_index)) + "\"";
        leaf("final_answer", attributes, nodes[*final_index].label);
    }
    separate();
    return out;
}

RawModelOutput printed_output(const ReasoningTrace& trace, std::mt19937_64* prose) {
    RawModelOutput raw;
    raw.text = print_trace(trace, prose);
    raw.method = trace.method();
    if (auto q = trace.question_index()) raw.question = trace.nodes()[*q].label;
    return raw;
}

} // namespace reasongraph
