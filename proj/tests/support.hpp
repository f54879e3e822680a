#pragma once

// Shared fixtures and independent reference oracles for the unit and
// acceptance suites. Everything here recomputes results by brute force or by
// explicit construction, never through the code paths under test.

#include <apartlearn/apartlearn.hpp>

#include <random>
#include <sstream>

namespace apartlearn::testing {

// --- fixture machines -----------------------------------------------------

// Three-state machine over inputs {a,b}, outputs {A,B,C}:
//   q0: a/A -> q0, b/B -> q1
//   q1: a/A -> q0, b/B -> q2
//   q2: a/C -> q1, b/B -> q2
inline MealyMachine three_state_machine() {
    Alphabet in;
    in.intern("a");
    in.intern("b");
    MealyBuilder b(in);
    StateId q0 = b.add_state("q0"), q1 = b.add_state("q1"), q2 = b.add_state("q2");
    OutputId A = b.intern_output("A"), B = b.intern_output("B"), C = b.intern_output("C");
    b.add_transition(q0, 0, A, q0);
    b.add_transition(q0, 1, B, q1);
    b.add_transition(q1, 0, A, q0);
    b.add_transition(q1, 1, B, q2);
    b.add_transition(q2, 0, C, q1);
    b.add_transition(q2, 1, B, q2);
    return b.build(q0);
}

// Observation tree matching the three-state machine, built from frozen
// query responses:
//   t0 -a/A-> t1,  t0 -b/B-> t2,  t2 -b/B-> t3,  t2 -a/A-> t5,  t3 -a/C-> t4
struct SmallTreeNodes {
    NodeId t0, t1, t2, t3, t4, t5;
};

inline SmallTreeNodes build_small_tree(ObservationTree& tree) {
    // outputs A=0, B=1, C=2 to match three_state_machine's interning
    tree.extend(tree.root(), Word{0}, OutputWord{0});
    tree.extend(tree.root(), Word{1, 1, 0}, OutputWord{1, 1, 2});
    tree.extend(tree.root(), Word{1, 0}, OutputWord{1, 0});
    SmallTreeNodes n;
    n.t0 = tree.root();
    n.t1 = tree.walk(tree.root(), Word{0});
    n.t2 = tree.walk(tree.root(), Word{1});
    n.t3 = tree.walk(tree.root(), Word{1, 1});
    n.t4 = tree.walk(tree.root(), Word{1, 1, 0});
    n.t5 = tree.walk(tree.root(), Word{1, 0});
    return n;
}

// Five-state machine consistent with the chain-shaped tree below:
//   s0: a/0 -> s0, b/0 -> s1     s1: a/1 -> s0, b/1 -> s2
//   s2: a/0 -> s1, b/0 -> s3     s3: a/1 -> s1, b/1 -> s4
//   s4: a/2 -> s0, b/1 -> s2
inline MealyMachine chain_machine() {
    Alphabet in;
    in.intern("a");
    in.intern("b");
    MealyBuilder b(in);
    StateId s[5];
    for (int j = 0; j < 5; ++j) s[j] = b.add_state("s" + std::to_string(j));
    OutputId o0 = b.intern_output("0"), o1 = b.intern_output("1"), o2 = b.intern_output("2");
    b.add_transition(s[0], 0, o0, s[0]);
    b.add_transition(s[0], 1, o0, s[1]);
    b.add_transition(s[1], 0, o1, s[0]);
    b.add_transition(s[1], 1, o1, s[2]);
    b.add_transition(s[2], 0, o0, s[1]);
    b.add_transition(s[2], 1, o0, s[3]);
    b.add_transition(s[3], 0, o1, s[1]);
    b.add_transition(s[3], 1, o1, s[4]);
    b.add_transition(s[4], 0, o2, s[0]);
    b.add_transition(s[4], 1, o1, s[2]);
    return b.build(s[0]);
}

// Chain-shaped observation tree with a five-node basis t0..t4 along b's and
// one frontier node per basis state, from frozen responses:
//   t0 -b/0-> t1 -b/1-> t2 -b/0-> t3 -b/1-> t4 -a/2-> t5
//   t0 -a/0-> t6 -a/0-> t7          t1 -a/1-> t8 -b/0-> t9
//   t2 -a/0-> t10 -a/1-> t11        t3 -a/1-> t12 -b/1-> t13
struct ChainTreeNodes {
    NodeId t[14];
};

inline ChainTreeNodes build_chain_tree(ObservationTree& tree) {
    tree.extend(tree.root(), Word{1, 1, 1, 1, 0}, OutputWord{0, 1, 0, 1, 2});
    tree.extend(tree.root(), Word{0, 0}, OutputWord{0, 0});
    tree.extend(tree.root(), Word{1, 0, 1}, OutputWord{0, 1, 0});
    tree.extend(tree.root(), Word{1, 1, 0, 0}, OutputWord{0, 1, 0, 1});
    tree.extend(tree.root(), Word{1, 1, 1, 0, 1}, OutputWord{0, 1, 0, 1, 1});
    ChainTreeNodes n;
    n.t[0] = tree.root();
    n.t[1] = tree.walk(tree.root(), Word{1});
    n.t[2] = tree.walk(tree.root(), Word{1, 1});
    n.t[3] = tree.walk(tree.root(), Word{1, 1, 1});
    n.t[4] = tree.walk(tree.root(), Word{1, 1, 1, 1});
    n.t[5] = tree.walk(tree.root(), Word{1, 1, 1, 1, 0});
    n.t[6] = tree.walk(tree.root(), Word{0});
    n.t[7] = tree.walk(tree.root(), Word{0, 0});
    n.t[8] = tree.walk(tree.root(), Word{1, 0});
    n.t[9] = tree.walk(tree.root(), Word{1, 0, 1});
    n.t[10] = tree.walk(tree.root(), Word{1, 1, 0});
    n.t[11] = tree.walk(tree.root(), Word{1, 1, 0, 0});
    n.t[12] = tree.walk(tree.root(), Word{1, 1, 1, 0});
    n.t[13] = tree.walk(tree.root(), Word{1, 1, 1, 0, 1});
    for (int j = 1; j <= 4; ++j) tree.promote(n.t[j]);
    return n;
}

// Cyclic counter over one input: state j steps to j+1 mod size with output 0
// except for the step out of the last state, which outputs 1. Minimal, and
// indistinguishable from a self-loop until `size` steps have been taken.
inline MealyMachine counter_machine(std::int32_t size) {
    Alphabet in;
    in.intern("a");
    MealyBuilder b(in);
    for (std::int32_t j = 0; j < size; ++j) b.add_state("c" + std::to_string(j));
    OutputId o0 = b.intern_output("0"), o1 = b.intern_output("1");
    for (std::int32_t j = 0; j < size; ++j)
        b.add_transition(j, 0, j == size - 1 ? o1 : o0, (j + 1) % size);
    return b.build(0);
}

// --- independent oracles ----------------------------------------------------

// Step-by-step single-transition replay.
inline TransferResult oracle_transfer(const MealyMachine& m, StateId start,
                                      std::span<const InputId> word) {
    TransferResult r;
    r.end = start;
    for (InputId i : word) {
        auto t = m.transition(r.end, i);
        if (!t.defined()) break;
        r.outputs.push_back(t.output);
        r.end = t.next;
        ++r.consumed;
    }
    return r;
}

// Exhaustive word enumeration up to max_len, comparing output names.
inline bool oracle_words_equal(const MealyMachine& m1, StateId q1, const MealyMachine& m2,
                               StateId q2, std::size_t max_len) {
    struct Rec {
        static bool go(const MealyMachine& m1, StateId q1, const MealyMachine& m2, StateId q2,
                       std::size_t budget) {
            for (InputId i = 0; i < m1.num_inputs(); ++i) {
                auto j = m2.inputs().find(m1.inputs().name(i));
                if (!j) return false;
                auto t1 = m1.transition(q1, i);
                auto t2 = m2.transition(q2, *j);
                if (m1.outputs().name(t1.output) != m2.outputs().name(t2.output)) return false;
                if (budget > 1 && !go(m1, t1.next, m2, t2.next, budget - 1)) return false;
            }
            return true;
        }
    };
    return max_len == 0 || Rec::go(m1, q1, m2, q2, max_len);
}

// Depth-first scan of all common defined words from (q, p).
inline bool oracle_apart(const ObservationTree& tree, NodeId q, NodeId p) {
    if (q == p) return false;
    for (InputId i = 0; i < tree.num_inputs(); ++i) {
        NodeId cq = tree.child(q, i), cp = tree.child(p, i);
        if (cq == NO_NODE || cp == NO_NODE) continue;
        if (tree.output(q, i) != tree.output(p, i)) return true;
        if (oracle_apart(tree, cq, cp)) return true;
    }
    return false;
}

// Reference expected reward: maximises over all adaptive experiments, with
// the expectation unrolled per candidate state (not per output group), and
// an explicit option to stop early. Exponential; only for small sets.
inline Rational oracle_expected_reward(const ObservationTree& tree,
                                       std::vector<NodeId> states) {
    std::sort(states.begin(), states.end());
    states.erase(std::unique(states.begin(), states.end()), states.end());
    Rational best = 0; // stopping immediately gains nothing
    for (InputId i = 0; i < tree.num_inputs(); ++i) {
        std::vector<NodeId> movers;
        for (NodeId q : states)
            if (tree.child(q, i) != NO_NODE) movers.push_back(q);
        if (movers.empty()) continue;
        Rational total = 0;
        for (NodeId true_state : movers) {
            OutputId seen = tree.output(true_state, i);
            std::int64_t separated = 0;
            std::vector<NodeId> survivors;
            for (NodeId q : movers) {
                if (tree.output(q, i) == seen)
                    survivors.push_back(tree.child(q, i));
                else
                    ++separated;
            }
            total += Rational(separated) + oracle_expected_reward(tree, survivors);
        }
        total /= static_cast<std::int64_t>(movers.size());
        if (total > best) best = total;
    }
    return best;
}

// Functional-simulation check by direct label comparison: map every tree
// node onto the hypothesis along its access sequence and require each tree
// edge's output to match the machine's.
inline bool oracle_consistent(const ObservationTree& tree, const Hypothesis& hyp) {
    std::deque<std::pair<NodeId, StateId>> queue{{tree.root(), 0}};
    while (!queue.empty()) {
        auto [node, state] = queue.front();
        queue.pop_front();
        for (InputId i = 0; i < tree.num_inputs(); ++i) {
            NodeId c = tree.child(node, i);
            if (c == NO_NODE) continue;
            if (hyp.machine.output_of(state, i) != tree.output(node, i)) return false;
            queue.emplace_back(c, hyp.machine.next(state, i));
        }
    }
    return true;
}

// --- randomized generation --------------------------------------------------

inline Word random_word(std::mt19937_64& rng, std::int32_t k, std::size_t len) {
    std::uniform_int_distribution<InputId> dist(0, k - 1);
    Word w(len);
    for (auto& i : w) i = dist(rng);
    return w;
}

// Observation tree filled by querying a known machine with random words; the
// functional simulation into the machine maps each node along its access
// sequence.
struct TreeFixture {
    MealyMachine machine;
    ObservationTree tree;

    explicit TreeFixture(MealyMachine m) : machine(std::move(m)), tree(machine.num_inputs()) {}

    NodeId teach(std::span<const InputId> word) {
        auto res = machine.transfer(word);
        return tree.extend(tree.root(), word, res.outputs);
    }

    StateId simulate(NodeId node) const { return machine.transfer(tree.access(node)).end; }
};

inline TreeFixture random_tree_fixture(std::mt19937_64& rng, std::int32_t n, std::int32_t k,
                                       std::int32_t p, std::size_t words, std::size_t max_len) {
    TreeFixture fx(random_machine(n, k, p, rng()));
    std::uniform_int_distribution<std::size_t> len_dist(1, max_len);
    for (std::size_t w = 0; w < words; ++w) fx.teach(random_word(rng, k, len_dist(rng)));
    return fx;
}

// Grows basis and frontier the way the learner would (promote isolated nodes,
// complete the basis by querying the machine) but never identifies frontier
// nodes, leaving genuine ambiguity for hypothesis tests.
inline void grow_basis(TreeFixture& fx, std::int32_t max_basis) {
    for (;;) {
        bool changed = false;
        for (NodeId q : std::vector<NodeId>(fx.tree.frontier().begin(), fx.tree.frontier().end())) {
            if (static_cast<std::int32_t>(fx.tree.basis().size()) >= max_basis) break;
            if (fx.tree.frontier_status(q).kind == FrontierKind::isolated) {
                fx.tree.promote(q);
                changed = true;
            }
        }
        for (NodeId b : fx.tree.basis())
            for (InputId i = 0; i < fx.tree.num_inputs(); ++i)
                if (!fx.tree.defined(b, i)) {
                    Word w = fx.tree.access(b);
                    w.push_back(i);
                    fx.teach(w);
                    changed = true;
                }
        if (!changed) return;
    }
}

// Hypothesis over the current basis with an arbitrary frontier-to-basis
// choice map (not necessarily non-apart); outputs are copied from the tree.
inline Hypothesis make_hypothesis(const TreeFixture& fx,
                                  const std::function<NodeId(NodeId)>& choose) {
    const auto& basis = fx.tree.basis();
    Hypothesis hyp;
    hyp.state_to_node = basis;
    for (StateId s = 0; s < static_cast<StateId>(basis.size()); ++s)
        hyp.node_to_state.emplace(basis[static_cast<size_t>(s)], s);
    const auto k = static_cast<size_t>(fx.tree.num_inputs());
    std::vector<MealyMachine::Transition> table(basis.size() * k);
    std::vector<std::string> names;
    for (size_t s = 0; s < basis.size(); ++s) {
        names.push_back("s" + std::to_string(s));
        for (size_t i = 0; i < k; ++i) {
            NodeId c = fx.tree.child(basis[s], static_cast<InputId>(i));
            NodeId target = fx.tree.is_basis(c) ? c : choose(c);
            if (!fx.tree.is_basis(c)) hyp.choice.emplace(c, target);
            table[s * k + i] = {fx.tree.output(basis[s], static_cast<InputId>(i)),
                                hyp.state_of(target)};
        }
    }
    hyp.machine =
        MealyMachine(fx.machine.inputs(), fx.machine.outputs(), std::move(names), 0, std::move(table));
    return hyp;
}

// --- misc -------------------------------------------------------------------

// BFS-canonical rendering of a complete machine; equal strings mean the
// machines are isomorphic (same alphabets assumed).
inline std::string canonical_signature(const MealyMachine& m) {
    std::vector<StateId> order{m.initial()};
    std::vector<StateId> index(static_cast<size_t>(m.num_states()), NO_STATE);
    index[static_cast<size_t>(m.initial())] = 0;
    std::ostringstream sig;
    for (std::size_t head = 0; head < order.size(); ++head) {
        for (InputId i = 0; i < m.num_inputs(); ++i) {
            auto t = m.transition(order[head], i);
            if (t.defined() && index[static_cast<size_t>(t.next)] == NO_STATE) {
                index[static_cast<size_t>(t.next)] = static_cast<StateId>(order.size());
                order.push_back(t.next);
            }
            sig << head << '.' << m.inputs().name(i) << '/';
            if (t.defined())
                sig << m.outputs().name(t.output) << '>' << index[static_cast<size_t>(t.next)];
            sig << ';';
        }
    }
    return sig.str();
}

inline Word word_from(const Alphabet& inputs, std::string_view letters) {
    Word w;
    for (char c : letters) w.push_back(*inputs.find(std::string(1, c)));
    return w;
}

} // namespace apartlearn::testing
