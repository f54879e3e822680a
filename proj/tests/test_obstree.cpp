#include <catch2/catch_amalgamated.hpp>

#include "support.hpp"

using namespace apartlearn;
using namespace apartlearn::testing;

TEST_CASE("trees grow from query responses") {
    ObservationTree tree(2);

    SECTION("a fresh tree has only the root, which is basis") {
        REQUIRE(tree.num_nodes() == 1);
        REQUIRE(tree.is_basis(tree.root()));
        REQUIRE(tree.frontier().empty());
        auto n = tree.norm();
        REQUIRE(n.sq == 1);
        REQUIRE(n.sdef == 0);
        REQUIRE(n.sapart == 0);
        REQUIRE(n.total == 1);
    }

    SECTION("extend walks existing edges and creates the rest") {
        NodeId end = tree.extend(tree.root(), Word{1, 1, 0}, OutputWord{1, 1, 2});
        REQUIRE(tree.num_nodes() == 4);
        REQUIRE(tree.depth(end) == 3);
        REQUIRE(tree.access(end) == Word{1, 1, 0});
        REQUIRE(tree.outputs_along(tree.root(), Word{1, 1, 0}) == OutputWord{1, 1, 2});

        SECTION("the empty word returns the start node unchanged") {
            REQUIRE(tree.extend(end, Word{}, OutputWord{}) == end);
            REQUIRE(tree.num_nodes() == 4);
        }

        SECTION("repeating a recorded query creates nothing") {
            REQUIRE(tree.extend(tree.root(), Word{1, 1, 0}, OutputWord{1, 1, 2}) == end);
            REQUIRE(tree.num_nodes() == 4);
        }

        SECTION("a contradicting response is an output conflict") {
            try {
                tree.extend(tree.root(), Word{1, 0}, OutputWord{1, 9});
                // the first symbol walks the existing b-edge, the second creates;
                // conflicts can only happen on existing edges
                REQUIRE(tree.num_nodes() == 5);
                tree.extend(tree.root(), Word{1, 0}, OutputWord{1, 8});
                FAIL("expected OutputConflictError");
            } catch (const OutputConflictError& e) {
                REQUIRE(e.input == 0);
                REQUIRE(e.old_output == 9);
                REQUIRE(e.new_output == 8);
            }
        }

        SECTION("the first new child of a basis node joins the frontier") {
            NodeId child = tree.walk(tree.root(), Word{1});
            REQUIRE(tree.in_frontier(child));
            REQUIRE_FALSE(tree.in_frontier(end));
        }
    }

    SECTION("mismatched word and output lengths are rejected") {
        REQUIRE_THROWS_AS(tree.extend(tree.root(), Word{0}, OutputWord{}), std::invalid_argument);
    }
}

TEST_CASE("apartness on the small reference tree") {
    ObservationTree tree(2);
    SmallTreeNodes n = build_small_tree(tree);

    SECTION("the documented pairs are apart with the documented witnesses") {
        REQUIRE(tree.is_apart(n.t0, n.t3) == Word{0});     // a
        REQUIRE(tree.is_apart(n.t2, n.t3) == Word{0});     // a
        REQUIRE(tree.is_apart(n.t0, n.t2) == Word{1, 0});  // b a
    }

    SECTION("no other pair among t0..t3 is apart before the aba query") {
        REQUIRE_FALSE(tree.is_apart(n.t0, n.t1).has_value());
        REQUIRE_FALSE(tree.is_apart(n.t1, n.t2).has_value());
        REQUIRE_FALSE(tree.is_apart(n.t1, n.t3).has_value());
    }

    SECTION("irreflexive and symmetric") {
        REQUIRE_FALSE(tree.is_apart(n.t0, n.t0).has_value());
        REQUIRE(tree.is_apart(n.t3, n.t0) == tree.is_apart(n.t0, n.t3));
    }

    SECTION("the aba query separates t2 from t1") {
        tree.extend(tree.root(), Word{0, 1, 0}, OutputWord{0, 1, 0}); // outputs A B A
        auto w = tree.is_apart(n.t2, n.t1);
        REQUIRE(w == Word{1, 0}); // b a: B C under t2 vs B A under t1
        REQUIRE_FALSE(tree.is_apart(n.t0, n.t1).has_value()); // both look like q0
    }
}

TEST_CASE("promote moves isolated frontier nodes into the basis") {
    ObservationTree tree(2);
    SmallTreeNodes n = build_small_tree(tree);

    REQUIRE(tree.basis() == std::vector<NodeId>{n.t0});
    REQUIRE(tree.frontier() == std::set<NodeId>{n.t1, n.t2});

    SECTION("a non-frontier node cannot be promoted") {
        REQUIRE_THROWS_AS(tree.promote(n.t3), std::invalid_argument);
    }

    SECTION("a non-isolated node cannot be promoted") {
        REQUIRE_THROWS_AS(tree.promote(n.t1), NotIsolatedError); // t1 not apart from t0
    }

    SECTION("promoting t2 grows the basis and refills the frontier") {
        auto before = tree.norm();
        tree.promote(n.t2);
        REQUIRE(tree.basis() == std::vector<NodeId>{n.t0, n.t2});
        REQUIRE(tree.frontier() == std::set<NodeId>{n.t1, n.t3, n.t5});
        auto after = tree.norm();
        REQUIRE(after.sq == before.sq + 2); // |S| grew from 1 to 2
        REQUIRE(after.total > before.total);
    }
}

TEST_CASE("frontier_status classifies candidates in ascending node order") {
    SECTION("the chain tree's last frontier node is ambiguous among all five") {
        ObservationTree tree(2);
        ChainTreeNodes n = build_chain_tree(tree);
        auto st = tree.frontier_status(n.t[5]);
        REQUIRE(st.kind == FrontierKind::ambiguous);
        REQUIRE(st.candidates ==
                std::vector<NodeId>{n.t[0], n.t[1], n.t[2], n.t[3], n.t[4]});
    }

    SECTION("identified after a separating query") {
        ObservationTree tree(2);
        SmallTreeNodes n = build_small_tree(tree);
        tree.promote(n.t2);
        tree.extend(tree.root(), Word{0, 1, 0}, OutputWord{0, 1, 0});
        auto st = tree.frontier_status(n.t1);
        REQUIRE(st.kind == FrontierKind::identified);
        REQUIRE(st.identified_as() == n.t0);
        REQUIRE(tree.frontier_status(n.t3).kind == FrontierKind::isolated);
    }

    SECTION("asking about a non-frontier node is an error") {
        ObservationTree tree(2);
        SmallTreeNodes n = build_small_tree(tree);
        REQUIRE_THROWS_AS(tree.frontier_status(n.t0), std::invalid_argument);
    }
}

TEST_CASE("norm components") {
    ObservationTree tree(2);
    tree.extend(tree.root(), Word{0}, OutputWord{0});
    auto n1 = tree.norm();
    REQUIRE(n1.sq == 1);
    REQUIRE(n1.sdef == 1); // one defined basis transition
    REQUIRE(n1.sapart == 0);

    tree.extend(tree.root(), Word{1, 1, 0}, OutputWord{1, 1, 2});
    auto n2 = tree.norm();
    REQUIRE(n2.sdef == 2);
    REQUIRE(n2.total >= n1.total);
}

TEST_CASE("apartness properties over random machine-driven trees") {
    std::mt19937_64 rng(404);

    SECTION("agreement with a brute-force scan of common defined words") {
        for (int round = 0; round < 40; ++round) {
            TreeFixture fx = random_tree_fixture(rng, 4, 2, 3, 10, 7);
            std::uniform_int_distribution<NodeId> pick(0, fx.tree.num_nodes() - 1);
            for (int pair = 0; pair < 30; ++pair) {
                NodeId q = pick(rng), p = pick(rng);
                bool expected = oracle_apart(fx.tree, q, p);
                auto witness = fx.tree.is_apart(q, p);
                REQUIRE(witness.has_value() == expected);
                if (witness) {
                    auto oq = fx.tree.outputs_along(q, *witness);
                    auto op = fx.tree.outputs_along(p, *witness);
                    REQUIRE(oq != op); // the witness is itself evidence
                }
            }
        }
    }

    SECTION("irreflexivity and symmetry") {
        for (int round = 0; round < 20; ++round) {
            TreeFixture fx = random_tree_fixture(rng, 5, 2, 2, 12, 6);
            for (NodeId q = 0; q < fx.tree.num_nodes(); ++q) {
                REQUIRE_FALSE(fx.tree.is_apart(q, q).has_value());
                for (NodeId p = q + 1; p < fx.tree.num_nodes(); ++p)
                    REQUIRE(fx.tree.is_apart(q, p).has_value() ==
                            fx.tree.is_apart(p, q).has_value());
            }
        }
    }

    SECTION("weak co-transitivity") {
        for (int round = 0; round < 20; ++round) {
            TreeFixture fx = random_tree_fixture(rng, 4, 2, 2, 12, 6);
            for (NodeId r = 0; r < fx.tree.num_nodes(); ++r)
                for (NodeId r2 = r + 1; r2 < fx.tree.num_nodes(); ++r2) {
                    auto witness = fx.tree.is_apart(r, r2);
                    if (!witness) continue;
                    for (NodeId q = 0; q < fx.tree.num_nodes(); ++q) {
                        if (fx.tree.walk(q, *witness) == NO_NODE) continue;
                        REQUIRE((fx.tree.apart(r, q) || fx.tree.apart(r2, q)));
                    }
                }
        }
    }

    SECTION("apart nodes map to inequivalent machine states") {
        for (int round = 0; round < 20; ++round) {
            TreeFixture fx = random_tree_fixture(rng, 5, 2, 2, 15, 8);
            for (NodeId q = 0; q < fx.tree.num_nodes(); ++q)
                for (NodeId p = q + 1; p < fx.tree.num_nodes(); ++p)
                    if (fx.tree.apart(q, p))
                        REQUIRE_FALSE(semantics_equal(fx.machine, fx.simulate(q), fx.machine,
                                                      fx.simulate(p)));
        }
    }

    SECTION("apartness facts are monotone under tree growth") {
        for (int round = 0; round < 10; ++round) {
            MealyMachine machine = random_machine(4, 2, 3, rng());
            std::vector<Word> log;
            for (int w = 0; w < 12; ++w) log.push_back(random_word(rng, 2, 6));

            TreeFixture full(machine);
            for (const auto& w : log) full.teach(w);

            std::uniform_int_distribution<std::size_t> cut(1, log.size() - 1);
            TreeFixture prefix(machine);
            std::size_t upto = cut(rng);
            for (std::size_t w = 0; w < upto; ++w) prefix.teach(log[w]);

            // node ids agree on the common prefix of the construction
            for (NodeId q = 0; q < prefix.tree.num_nodes(); ++q)
                for (NodeId p = q + 1; p < prefix.tree.num_nodes(); ++p)
                    if (prefix.tree.apart(q, p)) REQUIRE(full.tree.apart(q, p));
        }
    }
}

TEST_CASE("the debug dump annotates basis and frontier") {
    ObservationTree tree(2);
    SmallTreeNodes n = build_small_tree(tree);
    tree.promote(n.t2);

    Alphabet in, out;
    in.intern("a");
    in.intern("b");
    out.intern("A");
    out.intern("B");
    out.intern("C");
    std::string text = tree.to_dot(in, out);

    REQUIRE(text.find("t0 [class=\"basis\"]") != std::string::npos);
    REQUIRE(text.find("t2 [class=\"basis\"]") != std::string::npos);
    REQUIRE(text.find("t1 [class=\"frontier\"]") != std::string::npos);
    REQUIRE(text.find("[label=\"b/B\"]") != std::string::npos);

    // the dump stays inside the machine-readable subset
    auto back = parse_dot(text);
    REQUIRE(back.machine.num_states() == tree.num_nodes());
}
