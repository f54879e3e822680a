#pragma once

#include <array>
#include <functional>

#include "ads.hpp"
#include "obs_tree.hpp"
#include "oracle.hpp"

namespace apartlearn {

enum class Variant { plain, ads };
enum class Policy { strategic, any_order };

/// One record per completed rule application, for the structured event log.
struct RuleEvent {
    std::int32_t rule = 0; // 1..4
    std::int64_t norm_before = 0;
    std::int64_t norm_after = 0;
    std::uint64_t output_queries = 0; // spent by this application
    std::uint64_t input_symbols = 0;
};

struct LearnerOptions {
    Variant variant = Variant::plain;
    Policy policy = Policy::strategic;
    std::uint64_t seed = 0; // drives rule choice in any_order mode
    std::uint64_t max_output_queries = 0; // 0 = unbounded
    std::uint64_t max_input_symbols = 0;
    bool verify_norm_progress = true;
    std::function<void(const RuleEvent&)> event_sink;
};

struct RunReport {
    MealyMachine hypothesis;
    std::array<std::uint64_t, 4> rule_applications{0, 0, 0, 0};
    std::uint64_t output_queries = 0;
    std::uint64_t input_symbols = 0;
    std::uint64_t eq_queries = 0;
    std::uint64_t max_counterexample_length = 0;
    bool approx_accepted = false;
    /// Initial norm followed by the norm after each progressing rule
    /// application; strictly increasing. The accepting equivalence query is
    /// counted in rule_applications but adds no trace entry.
    std::vector<std::int64_t> norm_trace;

    std::uint64_t failed_eq_queries() const { return eq_queries == 0 ? 0 : eq_queries - 1; }
};

/// A complete machine over the basis nodes plus the frontier-to-basis choice
/// it was built from. Hypothesis state s corresponds to the s-th basis node
/// in ascending node order, so state 0 is always the tree root.
struct Hypothesis {
    MealyMachine machine;
    std::vector<NodeId> state_to_node;
    std::unordered_map<NodeId, StateId> node_to_state;
    std::unordered_map<NodeId, NodeId> choice; // h : frontier node -> basis node

    NodeId node_of(StateId s) const { return state_to_node.at(static_cast<size_t>(s)); }
    StateId state_of(NodeId n) const { return node_to_state.at(n); }

    /// Tree node corresponding to the hypothesis state reached by `word`.
    NodeId end_node(std::span<const InputId> word) const {
        return node_of(machine.transfer(word).end);
    }
};

/// Builds a hypothesis from the tree: basis-to-basis transitions are copied,
/// transitions into the frontier are redirected onto a non-apart basis node.
/// When every frontier node is identified the result is independent of the
/// tie-break; otherwise the lowest-index non-apart basis node is chosen.
/// Requires a complete basis and no isolated frontier node.
inline Hypothesis build_hypothesis(const ObservationTree& tree, const Alphabet& inputs,
                                   const Alphabet& outputs) {
    const auto& basis = tree.basis();
    Hypothesis hyp;
    hyp.state_to_node = basis;
    for (StateId s = 0; s < static_cast<StateId>(basis.size()); ++s)
        hyp.node_to_state.emplace(basis[static_cast<size_t>(s)], s);

    for (NodeId f : tree.frontier()) {
        FrontierStatus st = tree.frontier_status(f);
        if (st.kind == FrontierKind::isolated)
            throw IsolatedFrontierError("build_hypothesis: frontier node " + std::to_string(f) +
                                        " is apart from every basis node");
        hyp.choice.emplace(f, st.candidates.front());
    }

    const auto k = static_cast<size_t>(tree.num_inputs());
    std::vector<MealyMachine::Transition> table(basis.size() * k);
    std::vector<std::string> names;
    names.reserve(basis.size());
    for (size_t s = 0; s < basis.size(); ++s) {
        names.push_back("s" + std::to_string(s));
        for (size_t i = 0; i < k; ++i) {
            NodeId c = tree.child(basis[s], static_cast<InputId>(i));
            if (c == NO_NODE) throw std::invalid_argument("build_hypothesis: basis is not complete");
            NodeId target = tree.is_basis(c) ? c : hyp.choice.at(c);
            table[s * k + i] = {tree.output(basis[s], static_cast<InputId>(i)),
                                hyp.state_of(target)};
        }
    }
    hyp.machine = MealyMachine(inputs, outputs, std::move(names), 0, std::move(table));
    return hyp;
}

struct ConsistencyResult {
    bool consistent = false;
    Word conflict; // leads to a conflict when not consistent
};

/// Breadth-first search over (tree node, hypothesis state) pairs starting at
/// the roots. Either the induced map is a functional simulation, or the
/// access sequence of the first node found apart from its image is returned
/// (shortest in BFS order). Costs no teacher interaction.
inline ConsistencyResult check_consistency(const ObservationTree& tree, const Hypothesis& hyp) {
    std::deque<std::pair<NodeId, StateId>> queue{{tree.root(), 0}};
    while (!queue.empty()) {
        auto [node, state] = queue.front();
        queue.pop_front();
        NodeId image = hyp.node_of(state);
        if (node != image && tree.apart_uncached(node, image))
            return {false, tree.access(node)};
        for (InputId i = 0; i < tree.num_inputs(); ++i) {
            NodeId c = tree.child(node, i);
            if (c != NO_NODE) queue.emplace_back(c, hyp.machine.next(state, i));
        }
    }
    return {true, {}};
}

/// Shortest prefix of `rho` whose endpoints in tree and hypothesis are apart.
/// The tree must already contain `rho` (a replayed counterexample).
inline Word shortest_conflict_prefix(const ObservationTree& tree, const Hypothesis& hyp,
                                     std::span<const InputId> rho) {
    NodeId t = tree.root();
    StateId s = 0;
    for (std::size_t len = 1; len <= rho.size(); ++len) {
        t = tree.child(t, rho[len - 1]);
        if (t == NO_NODE)
            throw NoConflictError("shortest_conflict_prefix: counterexample is not in the tree");
        s = hyp.machine.next(s, rho[len - 1]);
        NodeId image = hyp.node_of(s);
        if (t != image && tree.apart(t, image))
            return Word(rho.begin(), rho.begin() + static_cast<std::ptrdiff_t>(len));
    }
    throw NoConflictError("shortest_conflict_prefix: no prefix of the word leads to a conflict");
}

/// Active learner maintaining an observation tree over the teacher's
/// responses. Grows the basis of pairwise-apart nodes until a hypothesis
/// passes the equivalence query. A learner owns its tree and teacher
/// connection exclusively.
class Learner {
public:
    explicit Learner(Teacher& teacher, LearnerOptions options = {})
        : teacher_(teacher),
          options_(std::move(options)),
          tree_(teacher.input_alphabet().size()),
          rng_(detail::mix_seed(options_.seed)) {}

    ObservationTree& tree() { return tree_; }
    const ObservationTree& tree() const { return tree_; }

    std::uint64_t output_queries() const { return output_queries_; }
    std::uint64_t input_symbols() const { return input_symbols_; }
    std::uint64_t eq_queries() const { return eq_queries_; }

    /// Poses an output query and records the response in the tree.
    NodeId observe(std::span<const InputId> word) {
        OutputWord outs = raw_output_query(word);
        return extend_checked(word, outs);
    }

    struct AdaptiveTrace {
        Word inputs;
        OutputWord outputs;
    };

    /// Runs `prefix` and then descends the decision tree, choosing each next
    /// input from the outputs seen so far. Stops at a leaf or at an output
    /// with no matching branch. Counts as a single output query (one reset);
    /// the whole trace is recorded in the tree.
    AdaptiveTrace run_adaptive_query(std::span<const InputId> prefix, const AdsNode& ads) {
        check_budget(prefix.size());
        teacher_.reset();
        AdaptiveTrace trace;
        trace.inputs.assign(prefix.begin(), prefix.end());
        trace.outputs.reserve(prefix.size());
        for (InputId i : prefix) trace.outputs.push_back(teacher_.step(i));
        const AdsNode* at = &ads;
        while (!at->is_leaf()) {
            OutputId o = teacher_.step(at->input);
            trace.inputs.push_back(at->input);
            trace.outputs.push_back(o);
            const AdsNode* next = at->child_for(o);
            if (next == nullptr) break; // unexpected output ends the experiment
            at = next;
        }
        ++output_queries_;
        input_symbols_ += trace.inputs.size();
        extend_checked(trace.inputs, trace.outputs);
        return trace;
    }

    /// (R1) Promote the lowest-index isolated frontier node.
    bool rule_r1() {
        for (NodeId q : tree_.frontier()) {
            if (tree_.frontier_status(q).kind == FrontierKind::isolated) {
                tree_.promote(q);
                return true;
            }
        }
        return false;
    }

    /// (R2) Complete the basis: query the first undefined (basis, input)
    /// pair. In the ads variant the query continues adaptively with a
    /// distinguishing experiment for the whole basis.
    bool rule_r2() {
        for (NodeId q : tree_.basis()) {
            for (InputId i = 0; i < tree_.num_inputs(); ++i) {
                if (tree_.defined(q, i)) continue;
                Word prefix = tree_.access(q);
                prefix.push_back(i);
                if (options_.variant == Variant::ads && tree_.basis().size() > 1) {
                    AdsNode ads = build_ads(tree_, tree_.basis());
                    run_adaptive_query(prefix, ads);
                } else {
                    observe(prefix);
                }
                return true;
            }
        }
        return false;
    }

    /// (R3) Identify a frontier node: query toward separating it from basis
    /// candidates. Plain mode replays a stored witness of two candidates; ads
    /// mode runs a distinguishing experiment over all candidates first and
    /// falls back to the witness query if it produced no new apartness pair.
    bool rule_r3() {
        for (NodeId q : tree_.frontier()) {
            FrontierStatus st = tree_.frontier_status(q);
            if (st.kind != FrontierKind::ambiguous) continue;
            if (options_.variant == Variant::ads) {
                std::int64_t before = tree_.norm().sapart;
                AdsNode ads = build_ads(tree_, st.candidates);
                run_adaptive_query(tree_.access(q), ads);
                if (tree_.norm().sapart > before) return true;
            }
            witness_query(q);
            return true;
        }
        return false;
    }

    Hypothesis build_hypothesis() const {
        return apartlearn::build_hypothesis(tree_, teacher_.input_alphabet(),
                                            teacher_.output_alphabet());
    }

    ConsistencyResult check_consistency(const Hypothesis& hyp) const {
        return apartlearn::check_consistency(tree_, hyp);
    }

    Word shortest_conflict_prefix(const Hypothesis& hyp, std::span<const InputId> rho) const {
        return apartlearn::shortest_conflict_prefix(tree_, hyp, rho);
    }

    /// Binary search shortening of a conflict: each round poses one output
    /// query and halves the number of transitions outside basis and frontier.
    /// Afterwards some frontier node is apart from the basis node the
    /// hypothesis merged it with, so `hyp` is no longer a hypothesis.
    void process_counterexample(const Hypothesis& hyp, Word sigma) {
        for (;;) {
            NodeId r = tree_.walk(tree_.root(), sigma);
            if (r == NO_NODE)
                throw NoConflictError("process_counterexample: word is not in the tree");
            if (tree_.is_basis(r) || tree_.in_frontier(r)) return;

            NodeId q = hyp.end_node(sigma);
            std::size_t rho_len = frontier_prefix_length(sigma);
            std::size_t h = (rho_len + sigma.size()) / 2;

            Word sigma1(sigma.begin(), sigma.begin() + static_cast<std::ptrdiff_t>(h));
            NodeId q1 = hyp.end_node(sigma1);
            NodeId r1 = tree_.walk(tree_.root(), sigma1);

            auto eta = tree_.is_apart(q, r);
            if (!eta)
                throw NoConflictError("process_counterexample: endpoints are not apart");

            Word query = tree_.access(q1);
            query.insert(query.end(), sigma.begin() + static_cast<std::ptrdiff_t>(h), sigma.end());
            std::size_t with_sigma2 = query.size();
            query.insert(query.end(), eta->begin(), eta->end());
            observe(query);

            if (tree_.apart(q1, r1)) {
                sigma = std::move(sigma1);
            } else {
                query.resize(with_sigma2); // keep access(q1) sigma2
                sigma = std::move(query);
            }
        }
    }

    /// Runs the main loop until the teacher accepts a hypothesis.
    RunReport run() {
        RunReport report;
        report.norm_trace.push_back(tree_.norm().total);
        for (;;) {
            if (options_.policy == Policy::strategic) {
                if (apply_and_record(report, 1)) continue;
                if (apply_and_record(report, 3)) continue;
                if (apply_and_record(report, 2)) continue;
                if (rule_r4(report)) return report;
            } else {
                std::int32_t rule = pick_any_order_rule();
                if (rule == 4) {
                    if (rule_r4(report)) return report;
                } else if (!apply_and_record(report, rule)) {
                    throw std::logic_error("picked rule R" + std::to_string(rule) +
                                           " was not applicable");
                }
            }
        }
    }

private:
    OutputWord raw_output_query(std::span<const InputId> word) {
        check_budget(word.size());
        OutputWord outs = teacher_.output_query(word);
        ++output_queries_;
        input_symbols_ += word.size();
        return outs;
    }

    NodeId extend_checked(std::span<const InputId> word, std::span<const OutputId> outputs) {
        try {
            return tree_.extend(tree_.root(), word, outputs);
        } catch (const OutputConflictError& e) {
            throw TeacherInconsistentError(std::string("teacher answered inconsistently: ") +
                                           e.what());
        }
    }

    void check_budget(std::size_t word_len) const {
        if (options_.max_output_queries != 0 && output_queries_ >= options_.max_output_queries)
            throw BudgetExceededError("output query budget of " +
                                      std::to_string(options_.max_output_queries) + " exhausted");
        if (options_.max_input_symbols != 0 &&
            input_symbols_ + word_len > options_.max_input_symbols)
            throw BudgetExceededError("input symbol budget of " +
                                      std::to_string(options_.max_input_symbols) + " exhausted");
    }

    // Plain (R3) query: access(q) followed by a stored witness separating the
    // two lowest candidates. Weak co-transitivity then forces a new apartness
    // pair with one of them.
    void witness_query(NodeId q) {
        FrontierStatus st = tree_.frontier_status(q);
        auto witness = tree_.is_apart(st.candidates[0], st.candidates[1]);
        if (!witness) throw Error("basis nodes are not pairwise apart"); // basis invariant broken
        Word query = tree_.access(q);
        query.insert(query.end(), witness->begin(), witness->end());
        observe(query);
    }

    std::size_t frontier_prefix_length(std::span<const InputId> sigma) const {
        NodeId at = tree_.root();
        for (std::size_t j = 0; j < sigma.size(); ++j) {
            at = tree_.child(at, sigma[j]);
            if (tree_.in_frontier(at)) return j + 1;
        }
        throw Error("conflict word does not cross the frontier");
    }

    bool apply_rule(std::int32_t rule) {
        switch (rule) {
            case 1: return rule_r1();
            case 2: return rule_r2();
            case 3: return rule_r3();
            default: throw std::logic_error("unknown rule");
        }
    }

    bool apply_and_record(RunReport& report, std::int32_t rule) {
        std::uint64_t oq = output_queries_, is = input_symbols_;
        if (!apply_rule(rule)) return false;
        record(report, rule, oq, is);
        return true;
    }

    void record(RunReport& report, std::int32_t rule, std::uint64_t oq_before,
                std::uint64_t is_before) {
        std::int64_t norm = tree_.norm().total;
        std::int64_t previous = report.norm_trace.back();
        if (options_.verify_norm_progress && norm <= previous)
            throw std::logic_error("rule R" + std::to_string(rule) +
                                   " did not increase the norm (" + std::to_string(previous) +
                                   " -> " + std::to_string(norm) + ")");
        report.norm_trace.push_back(norm);
        ++report.rule_applications[static_cast<size_t>(rule - 1)];
        if (options_.event_sink)
            options_.event_sink(RuleEvent{rule, previous, norm, output_queries_ - oq_before,
                                          input_symbols_ - is_before});
    }

    // (R4) Build a hypothesis, mine the tree for a conflict, and only if none
    // exists spend an equivalence query. A returned counterexample is first
    // replayed into the tree, then shortened by binary search.
    bool rule_r4(RunReport& report) {
        std::uint64_t oq = output_queries_, is = input_symbols_;
        Hypothesis hyp = build_hypothesis();
        ConsistencyResult cons = check_consistency(hyp);
        Word sigma;
        if (cons.consistent) {
            ++eq_queries_;
            EqResult eq = teacher_.equivalence_query(hyp.machine);
            if (eq.equivalent) {
                ++report.rule_applications[3];
                report.hypothesis = std::move(hyp.machine);
                report.output_queries = output_queries_;
                report.input_symbols = input_symbols_;
                report.eq_queries = eq_queries_;
                report.approx_accepted = eq.approximate;
                return true;
            }
            report.max_counterexample_length =
                std::max(report.max_counterexample_length,
                         static_cast<std::uint64_t>(eq.counterexample.size()));
            observe(eq.counterexample);
            sigma = shortest_conflict_prefix(hyp, eq.counterexample);
        } else {
            sigma = std::move(cons.conflict);
        }
        process_counterexample(hyp, sigma);
        record(report, 4, oq, is);
        return false;
    }

    std::int32_t pick_any_order_rule() {
        bool isolated = false, ambiguous = false;
        for (NodeId q : tree_.frontier()) {
            FrontierKind kind = tree_.frontier_status(q).kind;
            isolated = isolated || kind == FrontierKind::isolated;
            ambiguous = ambiguous || kind == FrontierKind::ambiguous;
        }
        bool complete = true;
        for (NodeId b : tree_.basis())
            for (InputId i = 0; i < tree_.num_inputs(); ++i)
                if (!tree_.defined(b, i)) complete = false;

        std::vector<std::int32_t> applicable;
        if (isolated) applicable.push_back(1);
        if (!complete) applicable.push_back(2);
        if (ambiguous) applicable.push_back(3);
        if (!isolated && complete) applicable.push_back(4);
        std::uniform_int_distribution<std::size_t> dist(0, applicable.size() - 1);
        return applicable[dist(rng_)];
    }

    Teacher& teacher_;
    LearnerOptions options_;
    ObservationTree tree_;
    std::mt19937_64 rng_;
    std::uint64_t output_queries_ = 0;
    std::uint64_t input_symbols_ = 0;
    std::uint64_t eq_queries_ = 0;
};

} // namespace apartlearn
