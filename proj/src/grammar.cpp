#include "reasongraph/grammar.hpp"
#include "reasongraph/error.hpp"
#include "reasongraph/tag_scanner.hpp"

#include <map>

namespace reasongraph {

namespace detail {
std::string_view prompt_resource(std::string_view name) noexcept;
}

const AttributeSpec* TagDescriptor::attribute(std::string_view attr) const {
    for (const auto& spec : attributes) {
        if (spec.name == attr) return &spec;
    }
    return nullptr;
}

const TagDescriptor* MethodGrammar::find(std::string_view tag) const {
    for (const auto& descriptor : tags) {
        if (descriptor.name == tag) return &descriptor;
    }
    return nullptr;
}

const TagDescriptor* MethodGrammar::tag_for(NodeKind kind) const {
    for (const auto& descriptor : tags) {
        if (descriptor.produces == kind) return &descriptor;
    }
    return nullptr;
}

void MethodParams::validate() const {
    auto positive = [](const char* name, int value) {
        if (value < 1) {
            throw Error(ErrorCode::invalid_params, std::string(name) + " must be at least 1");
        }
    };
    positive("num_chains", num_chains);
    positive("beam_width", beam_width);
    positive("max_depth", max_depth);
    positive("max_refinements", max_refinements);
    if (num_subquestions_hint) positive("num_subquestions_hint", *num_subquestions_hint);
    if (beam_width * max_depth > max_beam_cells) {
        throw Error(ErrorCode::invalid_params,
                    "beam_width * max_depth must not exceed " + std::to_string(max_beam_cells));
    }
}

namespace {

TagDescriptor leaf(std::string name, NodeKind kind, std::size_t min_occurs = 0,
                   std::optional<std::size_t> max_occurs = std::nullopt, std::string parent = {},
                   std::vector<AttributeSpec> attributes = {}) {
    return TagDescriptor{std::move(name), std::move(attributes), min_occurs, max_occurs,
                         std::move(parent), false, kind};
}

TagDescriptor final_answer_tag(bool tree) {
    std::vector<AttributeSpec> attributes;
    if (tree) attributes.push_back({"parent", false});
    return leaf("final_answer", NodeKind::final_answer, 1, 1, {}, std::move(attributes));
}

MethodGrammar make_grammar(ReasoningMethod method) {
    MethodGrammar grammar{method, {}, std::string(prompt_template_source(method))};
    auto& tags = grammar.tags;
    switch (method) {
    case ReasoningMethod::chain_of_thoughts:
        tags.push_back(leaf("step", NodeKind::step));
        tags.push_back(final_answer_tag(false));
        break;
    case ReasoningMethod::self_refine:
        tags.push_back(leaf("attempt", NodeKind::attempt, 1, 1));
        tags.push_back(leaf("reflection", NodeKind::reflection));
        tags.push_back(leaf("improved", NodeKind::improvement));
        tags.push_back(final_answer_tag(false));
        break;
    case ReasoningMethod::least_to_most:
        tags.push_back(leaf("subquestion", NodeKind::sub_question, 1));
        tags.push_back(leaf("subanswer", NodeKind::sub_answer, 1));
        tags.push_back(final_answer_tag(false));
        break;
    case ReasoningMethod::self_consistency:
        tags.push_back(TagDescriptor{"chain", {{"index", true}}, 1, std::nullopt, {}, true, std::nullopt});
        tags.push_back(leaf("step", NodeKind::step, 0, std::nullopt, "chain"));
        tags.push_back(leaf("answer", NodeKind::candidate, 1, 1, "chain"));
        tags.push_back(final_answer_tag(false));
        break;
    case ReasoningMethod::tree_of_thoughts:
        tags.push_back(leaf("node", NodeKind::candidate, 0, std::nullopt, {},
                            {{"id", true}, {"parent", true}, {"score", false}}));
        tags.push_back(final_answer_tag(true));
        break;
    case ReasoningMethod::beam_search:
        tags.push_back(leaf("node", NodeKind::candidate, 1, std::nullopt, {},
                            {{"id", true}, {"parent", true}, {"level", true}, {"score", true}}));
        tags.push_back(TagDescriptor{"selected_path", {}, 0, 1, {}, false, std::nullopt});
        tags.push_back(final_answer_tag(true));
        break;
    }
    return grammar;
}

std::string trimmed(std::string_view text) {
    return canonical_label(text);
}

std::string substitute(std::string_view tmpl, const std::map<std::string, std::string, std::less<>>& values) {
    std::string out;
    out.reserve(tmpl.size() + 256);
    std::size_t pos = 0;
    while (pos < tmpl.size()) {
        const auto open = tmpl.find('{', pos);
        if (open == std::string_view::npos) break;
        const auto close = tmpl.find('}', open);
        if (close == std::string_view::npos) break;
        out.append(tmpl.substr(pos, open - pos));
        const auto key = tmpl.substr(open + 1, close - open - 1);
        auto it = values.find(key);
        if (it == values.end()) {
            throw std::logic_error("prompt template uses unknown placeholder {" + std::string(key) + "}");
        }
        out += it->second;
        pos = close + 1;
    }
    out.append(tmpl.substr(pos));
    return out;
}

std::string require_question(std::string_view question) {
    auto text = trimmed(question);
    if (text.empty()) throw Error(ErrorCode::empty_question, "question must not be empty");
    return text;
}

} // namespace

const MethodGrammar& grammar_for(ReasoningMethod method) {
    static const std::vector<MethodGrammar> grammars = [] {
        std::vector<MethodGrammar> out;
        for (auto m : all_methods) out.push_back(make_grammar(m));
        return out;
    }();
    return grammars[static_cast<std::size_t>(method)];
}

std::string_view prompt_template_source(ReasoningMethod method) {
    return detail::prompt_resource(to_string(method));
}

std::string_view meta_prompt_template_source() {
    return detail::prompt_resource("meta");
}

std::string build_prompt(ReasoningMethod method, std::string_view question, const MethodParams& params) {
    auto text = require_question(question);
    params.validate();
    std::map<std::string, std::string, std::less<>> values{
        {"question", std::move(text)},
        {"param:num_chains", std::to_string(params.num_chains)},
        {"param:beam_width", std::to_string(params.beam_width)},
        {"param:max_depth", std::to_string(params.max_depth)},
        {"param:max_refinements", std::to_string(params.max_refinements)},
        {"subquestion_directive",
         params.num_subquestions_hint
             ? "Break the question into exactly " + std::to_string(*params.num_subquestions_hint) +
                   " sub-questions."
             : std::string("Break the question into as many sub-questions as it needs, usually two to four.")},
    };
    return substitute(grammar_for(method).prompt_template, values);
}

std::string build_meta_prompt(std::string_view question) {
    auto text = require_question(question);
    return substitute(meta_prompt_template_source(), {{"question", std::move(text)}});
}

ReasoningMethod parse_meta_selection(std::string_view raw) {
    static const std::vector<TagRule> rules{{"selected_method", {}, false}};
    auto extraction = scan_tags(raw, rules);
    if (extraction.elements.empty()) {
        throw Error(ErrorCode::no_selection_found, "response contains no <selected_method> element");
    }
    const auto content = trimmed(extraction.elements.front().text);

    std::string normalized;
    for (char c : content) {
        if (c == '"' || c == '\'' || c == '`') continue;
        if (c == '-' || c == ' ') {
            if (normalized.empty() || normalized.back() != '_') normalized.push_back('_');
            continue;
        }
        normalized.push_back((c >= 'A' && c <= 'Z') ? static_cast<char>(c + 32) : c);
    }
    if (auto method = method_from_string(normalized)) return *method;
    throw Error(ErrorCode::unknown_method, "'" + content + "' is not a supported reasoning method");
}

} // namespace reasongraph
