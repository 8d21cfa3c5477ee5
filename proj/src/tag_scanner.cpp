#include "reasongraph/tag_scanner.hpp"

#include <optional>

namespace reasongraph {

const std::string* Element::attribute(std::string_view key) const {
    for (const auto& [name, value] : attributes) {
        if (name == key) return &value;
    }
    return nullptr;
}

std::string decode_entities(std::string_view text) {
    static constexpr std::pair<std::string_view, char> entities[] = {
        {"&lt;", '<'}, {"&gt;", '>'}, {"&amp;", '&'}, {"&quot;", '"'}, {"&apos;", '\''},
    };
    std::string out;
    out.reserve(text.size());
    for (std::size_t i = 0; i < text.size();) {
        if (text[i] == '&') {
            bool matched = false;
            for (const auto& [entity, ch] : entities) {
                if (text.substr(i, entity.size()) == entity) {
                    out.push_back(ch);
                    i += entity.size();
                    matched = true;
                    break;
                }
            }
            if (matched) continue;
        }
        out.push_back(text[i++]);
    }
    return out;
}

std::string encode_entities(std::string_view text) {
    std::string out;
    out.reserve(text.size());
    for (char c : text) {
        switch (c) {
        case '&': out += "&amp;"; break;
        case '<': out += "&lt;"; break;
        case '>': out += "&gt;"; break;
        default: out.push_back(c);
        }
    }
    return out;
}

namespace {

constexpr bool is_alpha(char c) noexcept { return (c >= 'a' && c <= 'z') || (c >= 'A' && c <= 'Z'); }
constexpr bool is_digit(char c) noexcept { return c >= '0' && c <= '9'; }
constexpr bool is_ws(char c) noexcept {
    return c == ' ' || c == '\t' || c == '\n' || c == '\r' || c == '\f' || c == '\v';
}
constexpr bool is_name_start(char c) noexcept { return is_alpha(c) || c == '_'; }
constexpr bool is_name_char(char c) noexcept {
    return is_alpha(c) || is_digit(c) || c == '_' || c == '-' || c == ':' || c == '.';
}
constexpr char lower(char c) noexcept { return (c >= 'A' && c <= 'Z') ? static_cast<char>(c + 32) : c; }

struct Token {
    enum class Type { open, close, malformed };
    Type type = Type::open;
    const TagRule* rule = nullptr;
    std::vector<std::pair<std::string, std::string>> attributes;
    std::size_t begin = 0;
    std::size_t end = 0;
    bool self_closing = false;
};

enum class Stop { eof, closed, interrupted };

struct Outcome {
    std::size_t pos;
    Stop stop;
};

class Scanner {
public:
    Scanner(std::string_view text, const std::vector<TagRule>& rules, Diagnostics& diagnostics)
        : text_(text), rules_(rules), diagnostics_(diagnostics) {}

    Outcome scan_sequence(std::size_t pos, const TagRule* container, std::vector<Element>& out) {
        while (true) {
            const auto lt = text_.find('<', pos);
            if (lt == std::string_view::npos) return {text_.size(), Stop::eof};
            auto token = read(lt);
            if (!token) {
                pos = lt + 1;
                continue;
            }
            if (token->type == Token::Type::malformed) {
                diagnostics_.push_back(Diagnostic::warning(
                    DiagnosticCode::malformed_tag, "<" + token->rule->name + "> tag is never terminated", {},
                    Span{lt, token->end}));
                pos = lt + 1;
                continue;
            }
            if (token->type == Token::Type::close) {
                if (container) {
                    if (token->rule == container) return {token->end, Stop::closed};
                    return {lt, Stop::interrupted};
                }
                pos = token->end;
                continue;
            }

            const TagRule& rule = *token->rule;
            const std::string_view expected_parent = container ? std::string_view(container->name) : "";
            if (rule.parent != expected_parent) {
                if (container) return {lt, Stop::interrupted};
                Element dropped;
                std::size_t next = 0;
                if (read_element(*token, dropped, next)) {
                    diagnostics_.push_back(Diagnostic::warning(
                        DiagnosticCode::misplaced_element,
                        "<" + rule.name + "> must appear inside <" + rule.parent + ">", {}, dropped.span));
                }
                pos = next;
                continue;
            }

            Element element;
            std::size_t next = 0;
            if (read_element(*token, element, next)) out.push_back(std::move(element));
            pos = next;
        }
    }

private:
    const TagRule* lookup(std::string_view name) const {
        for (const auto& rule : rules_) {
            if (rule.name.size() != name.size()) continue;
            bool same = true;
            for (std::size_t i = 0; i < name.size() && same; ++i) same = lower(name[i]) == rule.name[i];
            if (same) return &rule;
        }
        return nullptr;
    }

    void skip_ws(std::size_t& pos) const {
        while (pos < text_.size() && is_ws(text_[pos])) ++pos;
    }

    // Reads the tag starting at text_[lt] == '<'. Returns nullopt for prose and
    // for tags outside the rule set.
    std::optional<Token> read(std::size_t lt) const {
        std::size_t pos = lt + 1;
        const bool closing = pos < text_.size() && text_[pos] == '/';
        if (closing) ++pos;
        if (pos >= text_.size() || !is_name_start(text_[pos])) return std::nullopt;
        const std::size_t name_begin = pos;
        while (pos < text_.size() && is_name_char(text_[pos])) ++pos;
        const TagRule* rule = lookup(text_.substr(name_begin, pos - name_begin));
        if (!rule) return std::nullopt;

        Token token;
        token.rule = rule;
        token.begin = lt;
        if (closing) {
            skip_ws(pos);
            if (pos >= text_.size() || text_[pos] != '>') return std::nullopt;
            token.type = Token::Type::close;
            token.end = pos + 1;
            return token;
        }
        if (pos < text_.size() && !is_ws(text_[pos]) && text_[pos] != '>' && text_[pos] != '/') {
            return std::nullopt;
        }

        auto malformed = [&](std::size_t at) {
            token.type = Token::Type::malformed;
            token.end = at;
            token.attributes.clear();
            return token;
        };
        while (true) {
            skip_ws(pos);
            if (pos >= text_.size() || text_[pos] == '<') return malformed(pos);
            if (text_[pos] == '>') {
                token.end = pos + 1;
                return token;
            }
            if (text_[pos] == '/') {
                if (pos + 1 < text_.size() && text_[pos + 1] == '>') {
                    token.self_closing = true;
                    token.end = pos + 2;
                    return token;
                }
                ++pos;
                continue;
            }
            const std::size_t key_begin = pos;
            while (pos < text_.size() && !is_ws(text_[pos]) && text_[pos] != '=' && text_[pos] != '>' &&
                   text_[pos] != '/' && text_[pos] != '<') {
                ++pos;
            }
            std::string key;
            for (char c : text_.substr(key_begin, pos - key_begin)) key.push_back(lower(c));
            std::string value;
            std::size_t look = pos;
            skip_ws(look);
            if (look < text_.size() && text_[look] == '=') {
                pos = look + 1;
                skip_ws(pos);
                if (pos >= text_.size()) return malformed(pos);
                const char quote = text_[pos];
                if (quote == '"' || quote == '\'') {
                    const auto close = text_.find(quote, pos + 1);
                    if (close == std::string_view::npos) return malformed(text_.size());
                    value = decode_entities(text_.substr(pos + 1, close - pos - 1));
                    pos = close + 1;
                } else {
                    const std::size_t value_begin = pos;
                    while (pos < text_.size() && !is_ws(text_[pos]) && text_[pos] != '>' && text_[pos] != '<') {
                        ++pos;
                    }
                    value = decode_entities(text_.substr(value_begin, pos - value_begin));
                }
            }
            token.attributes.emplace_back(std::move(key), std::move(value));
        }
    }

    bool read_element(const Token& open, Element& element, std::size_t& next) {
        const TagRule& rule = *open.rule;
        element.name = rule.name;
        element.attributes = open.attributes;
        element.span.start = open.begin;
        if (open.self_closing) {
            element.span.end = open.end;
            next = open.end;
            return true;
        }
        auto unclosed = [&](std::size_t resume) {
            diagnostics_.push_back(Diagnostic::warning(DiagnosticCode::unclosed_tag,
                                                       "<" + rule.name + "> is never closed; element dropped",
                                                       {}, Span{open.begin, open.end}));
            next = resume;
            return false;
        };

        if (rule.container) {
            const auto outcome = scan_sequence(open.end, &rule, element.children);
            if (outcome.stop != Stop::closed) return unclosed(outcome.pos);
            element.span.end = outcome.pos;
            next = outcome.pos;
            return true;
        }

        std::size_t pos = open.end;
        while (true) {
            const auto lt = text_.find('<', pos);
            if (lt == std::string_view::npos) return unclosed(text_.size());
            auto token = read(lt);
            if (!token || token->type == Token::Type::malformed) {
                pos = lt + 1;
                continue;
            }
            if (token->type == Token::Type::close && token->rule == open.rule) {
                element.text = decode_entities(text_.substr(open.end, lt - open.end));
                element.span.end = token->end;
                next = token->end;
                return true;
            }
            return unclosed(lt);
        }
    }

    std::string_view text_;
    const std::vector<TagRule>& rules_;
    Diagnostics& diagnostics_;
};

} // namespace

Extraction scan_tags(std::string_view text, const std::vector<TagRule>& rules) {
    Extraction result;
    Scanner scanner(text, rules, result.diagnostics);
    scanner.scan_sequence(0, nullptr, result.elements);
    return result;
}

} // namespace reasongraph
