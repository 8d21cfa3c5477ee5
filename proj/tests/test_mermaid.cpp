#include "oracles.hpp"

#include "reasongraph/error.hpp"
#include "reasongraph/mermaid.hpp"
#include "reasongraph/pipeline.hpp"
#include "reasongraph/synthetic.hpp"

#include <gtest/gtest.h>

#include <filesystem>
#include <fstream>
#include <random>
#include <sstream>

using namespace reasongraph;

namespace {

std::vector<std::string> lines_of(const std::string& text) {
    std::vector<std::string> out;
    std::istringstream in(text);
    for (std::string line; std::getline(in, line);) out.push_back(line);
    return out;
}

std::size_t count_lines(const std::string& text, std::string_view needle) {
    std::size_t n = 0;
    for (const auto& line : lines_of(text)) n += line.find(needle) != std::string::npos;
    return n;
}

// Diagram id of the trace node, from the id map.
std::string diagram_id(const DiagramDocument& doc, const NodeId& trace_id) {
    for (const auto& [k, v] : doc.id_map) {
        if (v == trace_id) return k;
    }
    return {};
}

std::string class_of(const DiagramDocument& doc, const std::string& diagram_node) {
    for (const auto& line : lines_of(doc.text)) {
        if (line.rfind("    class ", 0) != 0) continue;
        std::istringstream in(line);
        std::string kw, ids, name;
        in >> kw >> ids >> name;
        std::istringstream list(ids);
        for (std::string id; std::getline(list, id, ',');) {
            if (id == diagram_node) return name;
        }
    }
    return {};
}

std::string read(const std::filesystem::path& p) {
    std::ifstream in(p, std::ios::binary);
    std::ostringstream s;
    s << in.rdbuf();
    return s.str();
}

} // namespace

TEST(EscapeLabel, Examples) {
    EXPECT_EQ(escape_label("He said \"hi\""), "He said #quot;hi#quot;");
    EXPECT_EQ(escape_label("a<b"), "a#lt;b");
    EXPECT_EQ(escape_label("x"), "x");
    EXPECT_EQ(escape_label("a>b & c"), "a#gt;b #amp; c");
    EXPECT_EQ(escape_label("one\ntwo"), "one<br/>two");
}

TEST(WrapLabel, Examples) {
    EXPECT_EQ(wrap_label("alpha beta gamma", 10, 240), "alpha beta<br/>gamma");
    EXPECT_EQ(oracle::wrap("alpha beta gamma", 10, 240), "alpha beta<br/>gamma");
    EXPECT_EQ(wrap_label("short", 30, 240), "short");
}

TEST(WrapLabel, TruncatesAndHardSplits) {
    const std::string long_word(241, 'a');
    const auto lines = wrap_lines(long_word, 30, 240);
    ASSERT_EQ(lines.size(), 8u);
    for (std::size_t i = 0; i + 1 < lines.size(); ++i) EXPECT_EQ(lines[i], std::string(30, 'a'));
    EXPECT_EQ(lines.back(), std::string(30, 'a') + "\xE2\x80\xA6");
    std::size_t kept = 0;
    for (const auto& l : lines) kept += std::count(l.begin(), l.end(), 'a');
    EXPECT_EQ(kept, 240u);
    EXPECT_EQ(wrap_label(long_word, 30, 240), oracle::wrap(long_word, 30, 240));
}

TEST(WrapLabel, CountsCodePoints) {
    const std::string text = "\xCF\x80\xCF\x80\xCF\x80 caf\xC3\xA9";
    EXPECT_EQ(wrap_label(text, 8, 240), text);
    EXPECT_EQ(wrap_lines(text, 3, 240), (std::vector<std::string>{"\xCF\x80\xCF\x80\xCF\x80", "caf", "\xC3\xA9"}));
}

TEST(WrapLabel, MatchesReferenceWrapper) {
    std::mt19937_64 rng(17);
    const std::vector<std::string> words{"a",    "to",    "sum",     "four",          "eleven", "\xCF\x80",
                                         "caf\xC3\xA9", "antidisestablishmentarianism", "x&y", "a<b"};
    std::uniform_int_distribution<std::size_t> pick(0, words.size() - 1);
    std::uniform_int_distribution<int> n_words(1, 30), width(8, 40), cap(8, 120);
    for (int i = 0; i < 2000; ++i) {
        std::string label;
        for (int w = n_words(rng); w > 0; --w) label += (label.empty() ? "" : " ") + words[pick(rng)];
        int wrap = width(rng);
        int limit = std::max(wrap, cap(rng));
        EXPECT_EQ(wrap_label(label, wrap, limit), oracle::wrap(label, wrap, limit))
            << "label='" << label << "' width=" << wrap << " cap=" << limit;
    }
}

TEST(VisualizationConfig, Invariants) {
    VisualizationConfig c;
    EXPECT_NO_THROW(c.validate());
    c.wrap_width = 7;
    EXPECT_THROW(c.validate(), Error);
    c.wrap_width = 121;
    EXPECT_THROW(c.validate(), Error);
    c = {};
    c.max_label_chars = 10;
    EXPECT_THROW(c.validate(), Error);
    c = {};
    c.theme.final = "green";
    EXPECT_THROW(c.validate(), Error);
    c.theme.final = "#0f0";
    EXPECT_NO_THROW(c.validate());
}

TEST(Emit, SingleQuestion) {
    TraceBuilder b(ReasoningMethod::chain_of_thoughts);
    b.add_node(NodeKind::question, "Q1");
    const auto doc = emit(std::move(b).build());
    const auto lines = lines_of(doc.text);
    EXPECT_EQ(lines.front(), "flowchart TD");
    EXPECT_EQ(count_lines(doc.text, "flowchart TD"), 1u);
    EXPECT_EQ(count_lines(doc.text, "(["), 1u);
    EXPECT_EQ(count_lines(doc.text, "-->"), 0u);
    EXPECT_EQ(count_lines(doc.text, "classDef "), 1u);
    EXPECT_EQ(count_lines(doc.text, "    class "), 1u);
    EXPECT_EQ(doc.styles.size(), 1u);
    EXPECT_TRUE(validate_diagram(doc).empty());
}

TEST(Emit, ChainCountsAndShapes) {
    TraceBuilder b(ReasoningMethod::self_refine);
    auto q = b.add_node(NodeKind::question, "Q");
    auto a = b.add_node(NodeKind::attempt, "try");
    auto r = b.add_node(NodeKind::reflection, "hmm");
    b.add_edge(q, a);
    b.add_edge(a, r);
    const auto doc = emit(std::move(b).build());
    EXPECT_EQ(doc.id_map.size(), 3u);
    EXPECT_EQ(count_lines(doc.text, "-->"), 2u);
    EXPECT_NE(doc.text.find("    N0([\"Q\"])"), std::string::npos);
    EXPECT_NE(doc.text.find("    N1[\"try\"]"), std::string::npos);
    EXPECT_NE(doc.text.find("    N2(\"hmm\")"), std::string::npos);
    EXPECT_NE(doc.text.find("    N0 --> N1"), std::string::npos);
    EXPECT_EQ(class_of(doc, "N2"), "reflection");
}

TEST(Emit, LeftRightAndScores) {
    TraceBuilder b(ReasoningMethod::tree_of_thoughts);
    auto q = b.add_node(NodeKind::question, "Q");
    auto c = b.add_node(NodeKind::candidate, "c", {0.9, 1, {}});
    b.add_edge(q, c);
    const auto t = std::move(b).build();
    VisualizationConfig config;
    config.direction = Direction::left_right;
    const auto doc = emit(t, config);
    EXPECT_EQ(lines_of(doc.text).front(), "flowchart LR");
    EXPECT_NE(doc.text.find("c<br/>(score: 0.90)"), std::string::npos);
    config.show_scores = false;
    EXPECT_EQ(emit(t, config).text.find("score"), std::string::npos);
}

TEST(Emit, BeamSelectedClassFollowsBestPath) {
    TraceBuilder b(ReasoningMethod::beam_search);
    auto q = b.add_node(NodeKind::question, "Q", {{}, 0, {}});
    auto a = b.add_node(NodeKind::candidate, "A", {0.9, 1, {}});
    auto bb = b.add_node(NodeKind::candidate, "B", {0.5, 1, {}});
    auto c = b.add_node(NodeKind::candidate, "C", {0.2, 2, {}});
    auto d = b.add_node(NodeKind::candidate, "D", {0.7, 2, {}});
    auto f = b.add_node(NodeKind::final_answer, "F", {{}, 3, {}});
    b.add_edge(q, a);
    b.add_edge(q, bb);
    b.add_edge(a, c);
    b.add_edge(bb, d);
    b.add_edge(d, f);
    b.set_selected_path({q, bb, d, f});
    const auto t = std::move(b).build();

    const auto expected = *oracle::best_path(t);
    std::set<NodeId> on_path;
    for (auto i : expected.indices) on_path.insert(t.nodes()[i].id);
    ASSERT_EQ(on_path, (std::set<NodeId>{bb, d}));

    Diagnostics diags;
    const auto doc = render_diagram(t, {}, diags);
    EXPECT_TRUE(diags.empty());
    for (const auto& id : {a, bb, c, d}) {
        EXPECT_EQ(class_of(doc, diagram_id(doc, id)), on_path.count(id) ? "selected" : "candidate") << id;
    }
    EXPECT_EQ(class_of(doc, diagram_id(doc, q)), "question");
    EXPECT_EQ(class_of(doc, diagram_id(doc, f)), "final");
    EXPECT_TRUE(validate_diagram(doc).empty());
}

TEST(Emit, KindClasses) {
    TraceBuilder b(ReasoningMethod::least_to_most);
    auto q = b.add_node(NodeKind::question, "Q");
    auto s = b.add_node(NodeKind::sub_question, "s");
    auto a = b.add_node(NodeKind::sub_answer, "a");
    auto f = b.add_node(NodeKind::final_answer, "f");
    b.add_edge(q, s);
    b.add_edge(s, a);
    b.add_edge(a, f);
    const auto doc = emit(std::move(b).build());
    EXPECT_EQ(class_of(doc, "N0"), "question");
    EXPECT_EQ(class_of(doc, "N1"), "subquestion");
    EXPECT_EQ(class_of(doc, "N3"), "final");
    EXPECT_NE(doc.text.find("classDef question fill:#93c5fd"), std::string::npos);
    EXPECT_NE(doc.text.find("classDef subquestion fill:#e0f2fe"), std::string::npos);
    EXPECT_NE(doc.text.find("classDef final fill:#bbf7d0"), std::string::npos);
}

TEST(Emit, CycleThrows) {
    ReasoningTrace t(ReasoningMethod::chain_of_thoughts,
                     {{"q", NodeKind::question, "Q", {}, {}, {}}, {"a", NodeKind::step, "a", {}, {}, {}},
                      {"b", NodeKind::step, "b", {}, {}, {}}},
                     {{"q", "a", false}, {"a", "b", false}, {"b", "a", false}});
    try {
        emit(t);
        FAIL();
    } catch (const Error& e) {
        EXPECT_EQ(e.code(), ErrorCode::cycle);
    }
}

TEST(Emit, DeterministicAndValidOnRandomTraces) {
    std::mt19937_64 rng(2024);
    for (int i = 0; i < 300; ++i) {
        const auto t = random_trace(all_methods[i % all_methods.size()], rng);
        VisualizationConfig config;
        config.wrap_width = 8 + i % 40;
        config.direction = i % 2 ? Direction::left_right : Direction::top_down;
        const auto first = emit(t, config);
        EXPECT_EQ(first.text, emit(t, config).text);
        const auto diags = validate_diagram(first);
        EXPECT_TRUE(diags.empty()) << i << ": " << (diags.empty() ? "" : diags.front().message);
        EXPECT_EQ(count_lines(first.text, "-->"), t.edges().size());
        EXPECT_EQ(first.id_map.size(), t.nodes().size());
    }
}

TEST(ValidateDiagram, Examples) {
    DiagramDocument undeclared{"flowchart TD\n    N0([\"Q\"])\n    N0 --> N9\n", {}, {}};
    auto diags = validate_diagram(undeclared);
    ASSERT_EQ(diags.size(), 1u);
    EXPECT_EQ(diags[0].code, DiagnosticCode::undeclared_node);
    EXPECT_EQ(diags[0].severity, Severity::error);

    DiagramDocument headless{"    N0([\"Q\"])\n", {}, {}};
    diags = validate_diagram(headless);
    ASSERT_FALSE(diags.empty());
    EXPECT_EQ(diags[0].code, DiagnosticCode::missing_header);

    DiagramDocument bad_class{"flowchart LR\n    N0[\"x\"]\n    class N0 nope\n", {}, {}};
    EXPECT_EQ(count(validate_diagram(bad_class), DiagnosticCode::undeclared_class), 1u);

    DiagramDocument unbalanced{"flowchart LR\n    N0[\"x\"\n", {}, {}};
    EXPECT_TRUE(has_errors(validate_diagram(unbalanced)));

    DiagramDocument dup{"flowchart LR\n    N0[\"x\"]\n    N0[\"y\"]\n", {}, {}};
    EXPECT_EQ(count(validate_diagram(dup), DiagnosticCode::duplicate_node), 1u);
}

class Golden : public ::testing::TestWithParam<std::pair<const char*, ReasoningMethod>> {};

TEST_P(Golden, MatchesCheckedInDiagram) {
    const auto [name, method] = GetParam();
    const std::filesystem::path dir = GOLDEN_DIR;
    const auto input = read(dir / (std::string(name) + ".txt"));
    const auto expected = read(dir / (std::string(name) + ".mmd"));
    ASSERT_FALSE(input.empty());
    ASSERT_FALSE(expected.empty());
    const auto result = run_pipeline({input, method, "What is 17 * 24?"}, {});
    ASSERT_TRUE(result.trace);
    EXPECT_EQ(result.diagram.text, expected);
    EXPECT_EQ(run_pipeline({input, method, "What is 17 * 24?"}, {}).diagram.text, result.diagram.text);
}

INSTANTIATE_TEST_SUITE_P(Files, Golden,
                         ::testing::Values(std::pair{"chain_of_thoughts", ReasoningMethod::chain_of_thoughts},
                                           std::pair{"self_refine", ReasoningMethod::self_refine},
                                           std::pair{"beam_search", ReasoningMethod::beam_search}),
                         [](const auto& info) { return std::string(info.param.first); });
