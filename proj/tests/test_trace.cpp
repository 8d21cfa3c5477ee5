#include "oracles.hpp"

#include "reasongraph/error.hpp"
#include "reasongraph/synthetic.hpp"
#include "reasongraph/trace.hpp"

#include <gtest/gtest.h>

#include <random>

using namespace reasongraph;

namespace {

bool has_code(const Diagnostics& diags, DiagnosticCode code, Severity severity) {
    for (const auto& d : diags) {
        if (d.code == code && d.severity == severity) return true;
    }
    return false;
}

ReasoningTrace cot_chain() {
    TraceBuilder b(ReasoningMethod::chain_of_thoughts);
    auto q = b.add_node(NodeKind::question, "Q");
    auto s1 = b.add_node(NodeKind::step, "S1");
    auto s2 = b.add_node(NodeKind::step, "S2");
    auto f = b.add_node(NodeKind::final_answer, "F");
    b.add_edge(q, s1);
    b.add_edge(s1, s2);
    b.add_edge(s2, f);
    return std::move(b).build();
}

} // namespace

TEST(Method, NamesRoundTrip) {
    for (auto m : all_methods) EXPECT_EQ(method_from_string(to_string(m)), m);
    EXPECT_FALSE(method_from_string("zigzag"));
    EXPECT_FALSE(method_from_string("Beam_Search"));
    EXPECT_TRUE(is_tree_method(ReasoningMethod::beam_search));
    EXPECT_FALSE(is_tree_method(ReasoningMethod::self_consistency));
}

TEST(CanonicalLabel, CollapsesWhitespace) {
    EXPECT_EQ(canonical_label("  a \t b\n\nc  "), "a b c");
    EXPECT_EQ(canonical_label(""), "");
    EXPECT_EQ(canonical_label(" \n "), "");
}

TEST(ValidateTrace, SingleQuestionIsValid) {
    TraceBuilder b(ReasoningMethod::chain_of_thoughts);
    b.add_node(NodeKind::question, "Q1");
    EXPECT_TRUE(validate_trace(std::move(b).build()).empty());
}

TEST(ValidateTrace, TwoNodeCycleIsAnError) {
    ReasoningTrace t(ReasoningMethod::chain_of_thoughts,
                     {{"A", NodeKind::step, "a", {}, {}, {}}, {"B", NodeKind::step, "b", {}, {}, {}}},
                     {{"A", "B", false}, {"B", "A", false}});
    EXPECT_TRUE(has_code(validate_trace(t), DiagnosticCode::cycle, Severity::error));
}

TEST(ValidateTrace, LinearChainIsValid) { EXPECT_TRUE(validate_trace(cot_chain()).empty()); }

TEST(ValidateTrace, StructuralErrors) {
    ReasoningTrace dup(ReasoningMethod::chain_of_thoughts,
                       {{"q", NodeKind::question, "Q", {}, {}, {}}, {"q", NodeKind::step, "x", {}, {}, {}}}, {});
    EXPECT_TRUE(has_code(validate_trace(dup), DiagnosticCode::duplicate_node_id, Severity::error));

    ReasoningTrace dangling(ReasoningMethod::chain_of_thoughts, {{"q", NodeKind::question, "Q", {}, {}, {}}},
                            {{"q", "ghost", false}});
    EXPECT_TRUE(has_code(validate_trace(dangling), DiagnosticCode::unknown_edge_endpoint, Severity::error));

    ReasoningTrace loop(ReasoningMethod::chain_of_thoughts, {{"q", NodeKind::question, "Q", {}, {}, {}}},
                        {{"q", "q", false}});
    EXPECT_TRUE(has_code(validate_trace(loop), DiagnosticCode::self_loop, Severity::error));

    ReasoningTrace no_question(ReasoningMethod::chain_of_thoughts, {{"s", NodeKind::step, "S", {}, {}, {}}}, {});
    EXPECT_TRUE(has_code(validate_trace(no_question), DiagnosticCode::missing_question, Severity::error));

    ReasoningTrace bad_score(ReasoningMethod::tree_of_thoughts,
                             {{"q", NodeKind::question, "Q", {}, {}, {}},
                              {"a", NodeKind::candidate, "A", 1.5, 1, {}}},
                             {{"q", "a", false}});
    EXPECT_TRUE(has_code(validate_trace(bad_score), DiagnosticCode::score_out_of_range, Severity::error));

    ReasoningTrace empty_label(ReasoningMethod::chain_of_thoughts,
                               {{"q", NodeKind::question, "Q", {}, {}, {}}, {"s", NodeKind::step, "", {}, {}, {}}},
                               {{"q", "s", false}});
    EXPECT_TRUE(has_code(validate_trace(empty_label), DiagnosticCode::empty_label, Severity::error));
}

TEST(ValidateTrace, SelectedPathMustFollowEdges) {
    ReasoningTrace t(ReasoningMethod::beam_search,
                     {{"q", NodeKind::question, "Q", {}, 0, {}},
                      {"a", NodeKind::candidate, "A", 0.5, 1, {}},
                      {"f", NodeKind::final_answer, "F", {}, 2, {}}},
                     {{"q", "a", true}, {"a", "f", true}}, std::vector<NodeId>{"q", "f"});
    EXPECT_TRUE(has_code(validate_trace(t), DiagnosticCode::invalid_selected_path, Severity::error));
}

namespace {

// Question at level 0, three level-1 candidates, each parent given the
// listed number of level-2 children.
ReasoningTrace beam_with_children(const std::vector<int>& per_parent) {
    TraceBuilder b(ReasoningMethod::beam_search);
    auto q = b.add_node(NodeKind::question, "Q", {{}, 0, {}});
    for (std::size_t p = 0; p < per_parent.size(); ++p) {
        auto parent = b.add_node(NodeKind::candidate, "p" + std::to_string(p), {0.5, 1, {}});
        b.add_edge(q, parent);
        for (int c = 0; c < per_parent[p]; ++c) {
            auto child = b.add_node(NodeKind::candidate, "c" + std::to_string(p) + std::to_string(c), {0.5, 2, {}});
            b.add_edge(parent, child);
        }
    }
    return std::move(b).build();
}

} // namespace

TEST(ValidateTrace, BranchingWidthWarning) {
    const auto uneven = beam_with_children({2, 2, 1});
    ASSERT_TRUE(oracle::branching_inconsistent(uneven));
    const auto diags = validate_trace(uneven);
    EXPECT_TRUE(has_code(diags, DiagnosticCode::branching_width, Severity::warning));
    EXPECT_FALSE(has_errors(diags));
    EXPECT_EQ(count(diags, DiagnosticCode::branching_width), 1u);

    const auto even = beam_with_children({2, 2, 2});
    ASSERT_FALSE(oracle::branching_inconsistent(even));
    EXPECT_EQ(count(validate_trace(even), DiagnosticCode::branching_width), 0u);
}

TEST(ValidateTrace, BranchingWidthAgreesWithCountingOracle) {
    std::mt19937_64 rng(11);
    for (int round = 0; round < 300; ++round) {
        std::uniform_int_distribution<int> kids(0, 3);
        std::vector<int> per_parent(1 + round % 4);
        for (auto& k : per_parent) k = kids(rng);
        const auto t = beam_with_children(per_parent);
        EXPECT_EQ(count(validate_trace(t), DiagnosticCode::branching_width) > 0, oracle::branching_inconsistent(t))
            << "round " << round;
    }
}

TEST(TopologicalOrder, LinearChain) {
    EXPECT_EQ(topological_order(cot_chain()), (std::vector<NodeId>{"n0", "n1", "n2", "n3"}));
}

TEST(TopologicalOrder, DiamondBreaksTiesByInsertion) {
    TraceBuilder b(ReasoningMethod::tree_of_thoughts);
    auto q = b.add_node(NodeKind::question, "Q");
    auto a = b.add_node(NodeKind::candidate, "A");
    auto bb = b.add_node(NodeKind::candidate, "B");
    auto f = b.add_node(NodeKind::final_answer, "F");
    b.add_edge(q, a);
    b.add_edge(q, bb);
    b.add_edge(a, f);
    b.add_edge(bb, f);
    const auto t = std::move(b).build();
    const auto order = topological_order(t);
    EXPECT_EQ(order, (std::vector<NodeId>{q, a, bb, f}));
    EXPECT_EQ(order, *oracle::brute_force_topological(t));
}

TEST(TopologicalOrder, SingleNode) {
    TraceBuilder b(ReasoningMethod::chain_of_thoughts);
    auto q = b.add_node(NodeKind::question, "Q");
    EXPECT_EQ(topological_order(std::move(b).build()), std::vector<NodeId>{q});
}

TEST(TopologicalOrder, MatchesBruteForceOnSmallRandomDags) {
    std::mt19937_64 rng(5);
    for (int round = 0; round < 200; ++round) {
        const int n = 2 + round % 6;
        std::vector<TraceNode> nodes;
        for (int i = 0; i < n; ++i) nodes.push_back({"v" + std::to_string(i), NodeKind::step, "x", {}, {}, {}});
        // Random permutation of ids so insertion order differs from edge direction.
        std::vector<int> rank(n);
        for (int i = 0; i < n; ++i) rank[i] = i;
        std::shuffle(rank.begin(), rank.end(), rng);
        std::vector<TraceEdge> edges;
        std::bernoulli_distribution coin(0.4);
        for (int i = 0; i < n; ++i) {
            for (int j = 0; j < n; ++j) {
                if (rank[i] < rank[j] && coin(rng)) edges.push_back({nodes[i].id, nodes[j].id, false});
            }
        }
        const ReasoningTrace t(ReasoningMethod::chain_of_thoughts, nodes, edges);
        EXPECT_EQ(topological_order(t), *oracle::brute_force_topological(t)) << "round " << round;
    }
}

TEST(TopologicalOrder, CycleThrows) {
    ReasoningTrace t(ReasoningMethod::chain_of_thoughts,
                     {{"A", NodeKind::step, "a", {}, {}, {}}, {"B", NodeKind::step, "b", {}, {}, {}}},
                     {{"A", "B", false}, {"B", "A", false}});
    try {
        topological_order(t);
        FAIL() << "expected a cycle error";
    } catch (const Error& e) {
        EXPECT_EQ(e.code(), ErrorCode::cycle);
    }
}

TEST(StructuralEquality, IgnoresIdsButNotContent) {
    const auto a = cot_chain();
    ReasoningTrace renamed(ReasoningMethod::chain_of_thoughts,
                           {{"x3", NodeKind::final_answer, "F", {}, {}, {}},
                            {"x0", NodeKind::question, "Q", {}, {}, {}},
                            {"x2", NodeKind::step, "S2", {}, {}, {}},
                            {"x1", NodeKind::step, "S1", {}, {}, {}}},
                           {{"x0", "x1", false}, {"x1", "x2", false}, {"x2", "x3", false}});
    EXPECT_TRUE(structurally_equal(a, renamed));
    EXPECT_EQ(oracle::shape(a), oracle::shape(renamed));

    ReasoningTrace relabelled(ReasoningMethod::chain_of_thoughts,
                              {{"x0", NodeKind::question, "Q", {}, {}, {}},
                               {"x1", NodeKind::step, "S1", {}, {}, {}},
                               {"x2", NodeKind::step, "other", {}, {}, {}},
                               {"x3", NodeKind::final_answer, "F", {}, {}, {}}},
                              {{"x0", "x1", false}, {"x1", "x2", false}, {"x2", "x3", false}});
    EXPECT_FALSE(structurally_equal(a, relabelled));

    ReasoningTrace rewired(ReasoningMethod::chain_of_thoughts, renamed.nodes(),
                           {{"x0", "x2", false}, {"x2", "x1", false}, {"x1", "x3", false}});
    EXPECT_FALSE(structurally_equal(a, rewired));
}

TEST(StructuralEquality, AgreesWithShapeOracleOnRandomPairs) {
    std::mt19937_64 rng(21);
    for (int round = 0; round < 300; ++round) {
        const auto method = all_methods[round % all_methods.size()];
        const auto a = random_trace(method, rng);
        const auto b = (round % 3 == 0) ? a : random_trace(method, rng);
        EXPECT_EQ(structurally_equal(a, b), oracle::shape(a) == oracle::shape(b)) << "round " << round;
    }
}

TEST(SyntheticTraces, AreValidByConstruction) {
    std::mt19937_64 rng(3);
    for (auto method : all_methods) {
        for (int i = 0; i < 200; ++i) {
            const auto t = random_trace(method, rng);
            const auto diags = validate_trace(t);
            EXPECT_TRUE(diags.empty()) << to_string(method) << " #" << i << ": "
                                       << (diags.empty() ? "" : diags.front().message);
        }
    }
}
