#pragma once

#include "reasongraph/trace.hpp"

#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace reasongraph {

struct AttributeSpec {
    std::string name;
    bool required = false;
};

/// One tag of a method's output vocabulary.
struct TagDescriptor {
    std::string name;
    std::vector<AttributeSpec> attributes;
    std::size_t min_occurs = 0;
    std::optional<std::size_t> max_occurs; ///< per parent element; nullopt means unbounded
    std::string parent;                    ///< empty for top level
    bool container = false;                ///< holds child tags rather than text
    std::optional<NodeKind> produces;      ///< node kind this tag becomes, if any

    const AttributeSpec* attribute(std::string_view attr) const;
};

struct MethodGrammar {
    ReasoningMethod method;
    std::vector<TagDescriptor> tags;
    std::string prompt_template;

    const TagDescriptor* find(std::string_view tag) const;
    /// Tag emitted for a node kind, or nullptr when the method never produces it.
    const TagDescriptor* tag_for(NodeKind kind) const;
};

struct MethodParams {
    int num_chains = 3;
    int beam_width = 2;
    int max_depth = 3;
    int max_refinements = 2;
    std::optional<int> num_subquestions_hint;

    /// Throws Error(invalid_params) on a breach of the value constraints.
    void validate() const;
};

/// Product cap on beam_width * max_depth.
inline constexpr int max_beam_cells = 64;

const MethodGrammar& grammar_for(ReasoningMethod method);

std::string build_prompt(ReasoningMethod method, std::string_view question,
                         const MethodParams& params = {});
std::string build_meta_prompt(std::string_view question);

/// Reads the first <selected_method> element. Throws Error(no_selection_found)
/// or Error(unknown_method).
ReasoningMethod parse_meta_selection(std::string_view raw);

/// Raw template text as shipped in resources/prompts.
std::string_view prompt_template_source(ReasoningMethod method);
std::string_view meta_prompt_template_source();

} // namespace reasongraph
