#pragma once

#include "reasongraph/diagnostic.hpp"

#include <string>
#include <string_view>
#include <utility>
#include <vector>

namespace reasongraph {

/// A tag the scanner should recognize. Everything else in the text is prose.
struct TagRule {
    std::string name;   ///< lower case
    std::string parent; ///< empty when the tag belongs at top level
    bool container = false;
};

struct Element {
    std::string name;
    std::vector<std::pair<std::string, std::string>> attributes; ///< keys lower-cased, values entity-decoded
    std::string text; ///< entity-decoded inner text; empty for containers
    Span span;        ///< from the opening '<' to one past the closing '>'
    std::vector<Element> children;

    const std::string* attribute(std::string_view key) const;
};

struct Extraction {
    std::vector<Element> elements;
    Diagnostics diagnostics;
};

/// Lenient left-to-right scan for the given tags in arbitrary text.
///
/// Tag names match case-insensitively. Unknown tags are prose. A known tag
/// that is never closed, or is interrupted by another known opening tag or a
/// foreign closing tag, is dropped with an unclosed_tag warning. Known tags
/// found outside their required parent are dropped with misplaced_element.
Extraction scan_tags(std::string_view text, const std::vector<TagRule>& rules);

/// Decodes &lt; &gt; &amp; &quot; &apos; and leaves every other '&' verbatim.
std::string decode_entities(std::string_view text);

/// Inverse of decode_entities for the three characters that matter in inner text.
std::string encode_entities(std::string_view text);

} // namespace reasongraph
