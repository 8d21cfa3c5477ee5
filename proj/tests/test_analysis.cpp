#include "oracles.hpp"

#include "reasongraph/analysis.hpp"
#include "reasongraph/error.hpp"
#include "reasongraph/synthetic.hpp"

#include <gtest/gtest.h>

#include <random>

using namespace reasongraph;

namespace {

struct BeamExample {
    ReasoningTrace trace;
    NodeId a, b, c, d;
};

// Q -> A(0.9) -> C(0.2), Q -> B(0.5) -> D(0.7), D -> F.
BeamExample ab_example(std::optional<std::vector<std::string>> selected_labels = std::nullopt) {
    TraceBuilder t(ReasoningMethod::beam_search);
    auto q = t.add_node(NodeKind::question, "Q", {{}, 0, {}});
    auto a = t.add_node(NodeKind::candidate, "A", {0.9, 1, {}});
    auto b = t.add_node(NodeKind::candidate, "B", {0.5, 1, {}});
    auto c = t.add_node(NodeKind::candidate, "C", {0.2, 2, {}});
    auto d = t.add_node(NodeKind::candidate, "D", {0.7, 2, {}});
    auto f = t.add_node(NodeKind::final_answer, "F", {{}, 3, {}});
    t.add_edge(q, a);
    t.add_edge(q, b);
    t.add_edge(a, c);
    t.add_edge(b, d);
    t.add_edge(d, f);
    if (selected_labels) {
        std::vector<NodeId> ids;
        for (const auto& l : *selected_labels) ids.push_back(l == "Q" ? q : l == "A" ? a : l == "B" ? b : l == "C" ? c : l == "D" ? d : f);
        t.set_selected_path(ids);
    }
    return {std::move(t).build(), a, b, c, d};
}

ReasoningTrace votes(const std::vector<std::string>& answers) {
    TraceBuilder t(ReasoningMethod::self_consistency);
    auto q = t.add_node(NodeKind::question, "Q");
    std::vector<NodeId> ends;
    for (std::size_t i = 0; i < answers.size(); ++i) {
        auto s = t.add_node(NodeKind::step, "think", {{}, {}, static_cast<int>(i)});
        auto a = t.add_node(NodeKind::candidate, answers[i], {{}, {}, static_cast<int>(i)});
        t.add_edge(q, s);
        t.add_edge(s, a);
        ends.push_back(a);
    }
    auto f = t.add_node(NodeKind::final_answer, "x");
    for (const auto& e : ends) t.add_edge(e, f);
    return std::move(t).build();
}

} // namespace

TEST(BestBeamPath, ExhaustiveBeatsGreedy) {
    const auto ex = ab_example();
    const auto best = best_beam_path(ex.trace);
    EXPECT_EQ(best.path, (std::vector<NodeId>{ex.b, ex.d}));
    EXPECT_NEAR(best.total, 1.2, 1e-12);

    const auto greedy = oracle::greedy_path(ex.trace);
    EXPECT_NEAR(greedy.total, 1.1, 1e-12);
    const auto exhaustive = *oracle::best_path(ex.trace);
    EXPECT_NEAR(exhaustive.total, best.total, 1e-12);
    EXPECT_GT(exhaustive.total, greedy.total);
}

TEST(BestBeamPath, SingleChain) {
    TraceBuilder t(ReasoningMethod::beam_search);
    auto q = t.add_node(NodeKind::question, "Q", {{}, 0, {}});
    auto a = t.add_node(NodeKind::candidate, "A", {0.4, 1, {}});
    auto c = t.add_node(NodeKind::candidate, "C", {0.3, 2, {}});
    t.add_edge(q, a);
    t.add_edge(a, c);
    const auto best = best_beam_path(std::move(t).build());
    EXPECT_EQ(best.path, (std::vector<NodeId>{a, c}));
    EXPECT_NEAR(best.total, 0.7, 1e-12);
}

TEST(BestBeamPath, TieGoesToEarlierInsertion) {
    TraceBuilder t(ReasoningMethod::beam_search);
    auto q = t.add_node(NodeKind::question, "Q", {{}, 0, {}});
    auto a = t.add_node(NodeKind::candidate, "A", {0.5, 1, {}});
    auto b = t.add_node(NodeKind::candidate, "B", {0.5, 1, {}});
    auto la = t.add_node(NodeKind::candidate, "LA", {0.3, 2, {}});
    auto lb = t.add_node(NodeKind::candidate, "LB", {0.3, 2, {}});
    t.add_edge(q, b);
    t.add_edge(q, a);
    t.add_edge(b, lb);
    t.add_edge(a, la);
    const auto best = best_beam_path(std::move(t).build());
    EXPECT_EQ(best.path, (std::vector<NodeId>{a, la}));
}

TEST(BestBeamPath, DivergentSelectionWarning) {
    Diagnostics diags;
    best_beam_path(ab_example(std::vector<std::string>{"Q", "A", "C"}).trace, diags);
    EXPECT_EQ(count(diags, DiagnosticCode::divergent_selection), 1u);
    EXPECT_EQ(diags[0].severity, Severity::warning);

    diags.clear();
    best_beam_path(ab_example(std::vector<std::string>{"Q", "B", "D", "F"}).trace, diags);
    EXPECT_TRUE(diags.empty());
}

TEST(BestBeamPath, Errors) {
    auto code = [](const ReasoningTrace& t) {
        try {
            best_beam_path(t);
        } catch (const Error& e) {
            return e.code();
        }
        return ErrorCode::invalid_trace;
    };
    EXPECT_EQ(code(votes({"4"})), ErrorCode::wrong_method);

    TraceBuilder unscored(ReasoningMethod::beam_search);
    auto q = unscored.add_node(NodeKind::question, "Q", {{}, 0, {}});
    unscored.add_edge(q, unscored.add_node(NodeKind::candidate, "A", {{}, 1, {}}));
    EXPECT_EQ(code(std::move(unscored).build()), ErrorCode::missing_score);

    TraceBuilder bare(ReasoningMethod::beam_search);
    bare.add_node(NodeKind::question, "Q", {{}, 0, {}});
    EXPECT_EQ(code(std::move(bare).build()), ErrorCode::no_paths);
}

TEST(BestBeamPath, MatchesExhaustiveOracle) {
    std::mt19937_64 rng(42);
    for (int i = 0; i < 300; ++i) {
        const auto t = random_trace(ReasoningMethod::beam_search, rng);
        const auto best = best_beam_path(t);
        const auto expected = *oracle::best_path(t);
        EXPECT_NEAR(best.total, expected.total, 1e-9) << i;
        std::vector<NodeId> ids;
        for (auto index : expected.indices) ids.push_back(t.nodes()[index].id);
        EXPECT_EQ(best.path, ids) << i;
    }
}

TEST(BestBeamPath, InvariantUnderPositiveScaling) {
    std::mt19937_64 rng(8);
    for (int i = 0; i < 100; ++i) {
        const auto t = random_trace(ReasoningMethod::beam_search, rng);
        auto nodes = t.nodes();
        for (auto& n : nodes) {
            if (n.score) *n.score *= 0.5;
        }
        const ReasoningTrace scaled(t.method(), nodes, t.edges(), t.selected_path());
        EXPECT_EQ(best_beam_path(t).path, best_beam_path(scaled).path) << i;
    }
}

TEST(NormalizeAnswer, Rules) {
    EXPECT_EQ(normalize_answer("Paris."), "paris");
    EXPECT_EQ(normalize_answer(" paris"), "paris");
    EXPECT_EQ(normalize_answer("  X  =   7 "), "x = 7");
    EXPECT_EQ(normalize_answer("3.5"), "3.5");
    EXPECT_EQ(normalize_answer("end.."), "end.");
    for (std::string s : {"Paris.", " paris", "A  B .", "\tq\n", "", "."}) EXPECT_EQ(normalize_answer(s), oracle::normalize(s)) << s;
}

TEST(MajorityVote, Plurality) {
    const auto v = majority_vote(votes({"4", "4", "5"}));
    EXPECT_EQ(v.winner, "4");
    EXPECT_EQ(v.counts, (std::map<std::string, int>{{"4", 2}, {"5", 1}}));
    EXPECT_FALSE(v.tie);
}

TEST(MajorityVote, TieGoesToFirstChain) {
    const auto v = majority_vote(votes({"4", "5"}));
    EXPECT_EQ(v.winner, "4");
    EXPECT_TRUE(v.tie);
    EXPECT_EQ(majority_vote(votes({"5", "4"})).winner, "5");
}

TEST(MajorityVote, NormalizesBeforeCounting) {
    const std::vector<std::string> answers{"Paris.", " paris"};
    const auto v = majority_vote(votes(answers));
    const auto expected = oracle::vote(answers);
    EXPECT_EQ(v.winner, "paris");
    EXPECT_EQ(v.counts, (std::map<std::string, int>{{"paris", 2}}));
    EXPECT_EQ(v.winner, expected.winner);
    EXPECT_EQ(v.counts, expected.counts);
    EXPECT_FALSE(v.tie);
}

TEST(MajorityVote, Errors) {
    TraceBuilder empty(ReasoningMethod::self_consistency);
    empty.add_node(NodeKind::question, "Q");
    try {
        majority_vote(std::move(empty).build());
        FAIL();
    } catch (const Error& e) {
        EXPECT_EQ(e.code(), ErrorCode::no_chain_answers);
    }
    try {
        majority_vote(ab_example().trace);
        FAIL();
    } catch (const Error& e) {
        EXPECT_EQ(e.code(), ErrorCode::wrong_method);
    }
}

TEST(MajorityVote, MatchesFrequencyOracle) {
    std::mt19937_64 rng(77);
    const std::vector<std::string> pool{"4", "4.", " 4 ", "5", "Paris", "paris.", "PARIS", "x = 7", "x  =  7."};
    std::uniform_int_distribution<std::size_t> pick(0, pool.size() - 1);
    std::uniform_int_distribution<int> size(1, 7);
    for (int i = 0; i < 300; ++i) {
        std::vector<std::string> answers(size(rng));
        for (auto& a : answers) a = pool[pick(rng)];
        const auto v = majority_vote(votes(answers));
        const auto expected = oracle::vote(answers);
        EXPECT_EQ(v.winner, expected.winner) << i;
        EXPECT_EQ(v.counts, expected.counts) << i;
        EXPECT_EQ(v.tie, expected.tie) << i;
    }
}

TEST(TraceStats, Chain) {
    TraceBuilder t(ReasoningMethod::chain_of_thoughts);
    auto q = t.add_node(NodeKind::question, "Q");
    auto a = t.add_node(NodeKind::step, "a");
    auto b = t.add_node(NodeKind::step, "b");
    auto f = t.add_node(NodeKind::final_answer, "f");
    t.add_edge(q, a);
    t.add_edge(a, b);
    t.add_edge(b, f);
    const auto s = trace_stats(std::move(t).build());
    EXPECT_EQ(s.node_count, 4u);
    EXPECT_EQ(s.edge_count, 3u);
    EXPECT_EQ(s.depth, 3u);
    EXPECT_EQ(s.max_width, 1u);
    EXPECT_EQ(s.kind_counts.at(NodeKind::step), 2u);
}

TEST(TraceStats, BeamExample) {
    const auto ex = ab_example();
    const auto s = trace_stats(ex.trace);
    EXPECT_EQ(s.node_count, 6u);
    EXPECT_EQ(s.depth, 3u);
    EXPECT_EQ(s.max_width, 2u);
    // Every candidate's level attribute agrees with the layer used for depth.
    for (const auto& n : ex.trace.nodes()) {
        if (n.kind == NodeKind::candidate) {
            EXPECT_LE(static_cast<std::size_t>(*n.level), s.depth);
        }
    }
    EXPECT_TRUE(validate_trace(ex.trace).empty());
}

TEST(TraceStats, SingleQuestion) {
    TraceBuilder t(ReasoningMethod::chain_of_thoughts);
    t.add_node(NodeKind::question, "Q");
    const auto s = trace_stats(std::move(t).build());
    EXPECT_EQ(s.node_count, 1u);
    EXPECT_EQ(s.edge_count, 0u);
    EXPECT_EQ(s.depth, 0u);
}
