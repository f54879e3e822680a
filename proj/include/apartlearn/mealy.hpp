#pragma once

#include <algorithm>
#include <cassert>
#include <deque>
#include <map>
#include <numeric>
#include <random>
#include <span>
#include <unordered_set>
#include <utility>

#include "core.hpp"

namespace apartlearn {

/// Result of running an input word from a state of a (possibly partial)
/// machine. `consumed < word.size()` means the run hit an undefined
/// transition; `end` is then the last state reached.
struct TransferResult {
    OutputWord outputs;
    StateId end = NO_STATE;
    std::size_t consumed = 0;
};

/// A deterministic Mealy machine. Output and transition functions are stored
/// as one (output, next) pair per (state, input), so one is defined exactly
/// when the other is. Immutable after construction and safe to share across
/// threads.
class MealyMachine {
public:
    struct Transition {
        OutputId output = NO_OUTPUT;
        StateId next = NO_STATE;
        bool defined() const { return next != NO_STATE; }
    };

    MealyMachine() = default;

    MealyMachine(Alphabet inputs, Alphabet outputs, std::vector<std::string> state_names,
                 StateId initial, std::vector<Transition> table)
        : inputs_(std::move(inputs)),
          outputs_(std::move(outputs)),
          state_names_(std::move(state_names)),
          initial_(initial),
          table_(std::move(table)) {
        if (state_names_.empty()) throw Error("machine must have at least one state");
        if (initial_ < 0 || initial_ >= num_states()) throw Error("initial state out of range");
        if (table_.size() != state_names_.size() * static_cast<size_t>(inputs_.size()))
            throw Error("transition table size mismatch");
        complete_ = std::all_of(table_.begin(), table_.end(),
                                [](const Transition& t) { return t.defined(); });
    }

    StateId initial() const { return initial_; }
    std::int32_t num_states() const { return static_cast<std::int32_t>(state_names_.size()); }
    std::int32_t num_inputs() const { return inputs_.size(); }
    bool is_complete() const { return complete_; }

    const Alphabet& inputs() const { return inputs_; }
    const Alphabet& outputs() const { return outputs_; }
    const std::string& state_name(StateId q) const { return state_names_.at(static_cast<size_t>(q)); }

    const Transition& transition(StateId q, InputId i) const {
        return table_[static_cast<size_t>(q) * static_cast<size_t>(inputs_.size()) +
                      static_cast<size_t>(i)];
    }

    StateId next(StateId q, InputId i) const { return transition(q, i).next; }
    OutputId output_of(StateId q, InputId i) const { return transition(q, i).output; }

    TransferResult transfer(StateId start, std::span<const InputId> word) const {
        assert(start >= 0 && start < num_states());
        TransferResult res;
        res.end = start;
        res.outputs.reserve(word.size());
        for (InputId i : word) {
            const Transition& t = transition(res.end, i);
            if (!t.defined()) break;
            res.outputs.push_back(t.output);
            res.end = t.next;
            ++res.consumed;
        }
        return res;
    }

    TransferResult transfer(std::span<const InputId> word) const {
        return transfer(initial_, word);
    }

private:
    Alphabet inputs_;
    Alphabet outputs_;
    std::vector<std::string> state_names_;
    StateId initial_ = 0;
    std::vector<Transition> table_;
    bool complete_ = false;
};

/// Incremental construction helper; rejects duplicate transitions.
class MealyBuilder {
public:
    explicit MealyBuilder(Alphabet inputs) : inputs_(std::move(inputs)) {}

    StateId add_state(std::string name) {
        state_names_.push_back(std::move(name));
        table_.resize(state_names_.size() * static_cast<size_t>(inputs_.size()));
        return static_cast<StateId>(state_names_.size() - 1);
    }

    OutputId intern_output(std::string_view name) { return outputs_.intern(name); }

    void add_transition(StateId src, InputId input, OutputId output, StateId dst) {
        auto& slot = table_.at(static_cast<size_t>(src) * static_cast<size_t>(inputs_.size()) +
                               static_cast<size_t>(input));
        if (slot.defined())
            throw Error("duplicate transition from state '" + state_names_.at(static_cast<size_t>(src)) +
                        "' on input '" + inputs_.name(input) + "'");
        slot = {output, dst};
    }

    MealyMachine build(StateId initial) {
        return MealyMachine(inputs_, outputs_, state_names_, initial, table_);
    }

    const Alphabet& inputs() const { return inputs_; }
    Alphabet& outputs() { return outputs_; }

private:
    Alphabet inputs_;
    Alphabet outputs_;
    std::vector<std::string> state_names_;
    std::vector<MealyMachine::Transition> table_;
};

inline std::vector<bool> reachable_states(const MealyMachine& m) {
    std::vector<bool> seen(static_cast<size_t>(m.num_states()), false);
    std::deque<StateId> queue{m.initial()};
    seen[static_cast<size_t>(m.initial())] = true;
    while (!queue.empty()) {
        StateId q = queue.front();
        queue.pop_front();
        for (InputId i = 0; i < m.num_inputs(); ++i) {
            StateId nxt = m.next(q, i);
            if (nxt != NO_STATE && !seen[static_cast<size_t>(nxt)]) {
                seen[static_cast<size_t>(nxt)] = true;
                queue.push_back(nxt);
            }
        }
    }
    return seen;
}

namespace detail {

// Index translation between two machines that share input names. Outputs are
// compared by name; an output of `from` whose name `to` has never used maps
// to a sentinel that compares unequal to everything.
struct SymbolTranslation {
    std::vector<InputId> input_to;   // from-input index -> to-input index
    std::vector<OutputId> output_to; // from-output index -> to-output index or -2

    static SymbolTranslation between(const MealyMachine& from, const MealyMachine& to) {
        if (from.num_inputs() != to.num_inputs())
            throw std::invalid_argument("machines have different input alphabets");
        SymbolTranslation tr;
        tr.input_to.resize(static_cast<size_t>(from.num_inputs()));
        for (InputId i = 0; i < from.num_inputs(); ++i) {
            auto found = to.inputs().find(from.inputs().name(i));
            if (!found) throw std::invalid_argument("input '" + from.inputs().name(i) +
                                                    "' missing from second machine");
            tr.input_to[static_cast<size_t>(i)] = *found;
        }
        tr.output_to.resize(static_cast<size_t>(from.outputs().size()));
        for (OutputId o = 0; o < from.outputs().size(); ++o) {
            auto found = to.outputs().find(from.outputs().name(o));
            tr.output_to[static_cast<size_t>(o)] = found ? *found : -2;
        }
        return tr;
    }
};

inline void require_complete(const MealyMachine& m, const char* op) {
    if (!m.is_complete()) throw std::invalid_argument(std::string(op) + " requires a complete machine");
}

} // namespace detail

/// True iff no input word of length <= depth separates q1 (in m1) from q2 (in
/// m2). With depth >= |Q1|*|Q2| the answer is exact, since any separating word
/// can be shortened below the number of reachable product pairs.
inline bool semantics_equal(const MealyMachine& m1, StateId q1, const MealyMachine& m2, StateId q2,
                            std::int64_t depth) {
    detail::require_complete(m1, "semantics_equal");
    detail::require_complete(m2, "semantics_equal");
    auto tr = detail::SymbolTranslation::between(m1, m2);

    auto key = [&](StateId a, StateId b) {
        return static_cast<std::uint64_t>(a) * static_cast<std::uint64_t>(m2.num_states()) +
               static_cast<std::uint64_t>(b);
    };
    std::unordered_set<std::uint64_t> visited{key(q1, q2)};
    std::deque<std::pair<StateId, StateId>> layer{{q1, q2}};
    for (std::int64_t d = 0; d < depth && !layer.empty(); ++d) {
        std::deque<std::pair<StateId, StateId>> next_layer;
        for (auto [a, b] : layer) {
            for (InputId i = 0; i < m1.num_inputs(); ++i) {
                InputId j = tr.input_to[static_cast<size_t>(i)];
                if (tr.output_to[static_cast<size_t>(m1.output_of(a, i))] != m2.output_of(b, j))
                    return false;
                auto k = key(m1.next(a, i), m2.next(b, j));
                if (visited.insert(k).second)
                    next_layer.emplace_back(m1.next(a, i), m2.next(b, j));
            }
        }
        layer = std::move(next_layer);
    }
    return true;
}

inline bool semantics_equal(const MealyMachine& m1, StateId q1, const MealyMachine& m2, StateId q2) {
    return semantics_equal(m1, q1, m2, q2,
                           static_cast<std::int64_t>(m1.num_states()) * m2.num_states());
}

struct BisimResult {
    bool equivalent = false;
    Word counterexample; // in m1's input indices; empty when equivalent
    explicit operator bool() const { return equivalent; }
};

/// Product BFS from the initial pair. On failure returns a shortest word on
/// which the two machines produce different output sequences.
inline BisimResult bisimilar(const MealyMachine& m1, const MealyMachine& m2) {
    detail::require_complete(m1, "bisimilar");
    detail::require_complete(m2, "bisimilar");
    auto tr = detail::SymbolTranslation::between(m1, m2);

    struct Visit {
        StateId a, b;
        std::int32_t pred;
        InputId via;
    };
    auto key = [&](StateId a, StateId b) {
        return static_cast<std::uint64_t>(a) * static_cast<std::uint64_t>(m2.num_states()) +
               static_cast<std::uint64_t>(b);
    };
    std::vector<Visit> order{{m1.initial(), m2.initial(), -1, NO_INPUT}};
    std::unordered_set<std::uint64_t> visited{key(m1.initial(), m2.initial())};

    auto word_to = [&](std::int32_t idx, InputId last) {
        Word w{last};
        for (std::int32_t at = idx; order[static_cast<size_t>(at)].pred >= 0;
             at = order[static_cast<size_t>(at)].pred)
            w.push_back(order[static_cast<size_t>(at)].via);
        std::reverse(w.begin(), w.end());
        return w;
    };

    for (std::size_t head = 0; head < order.size(); ++head) {
        auto [a, b, pred, via] = order[head];
        for (InputId i = 0; i < m1.num_inputs(); ++i) {
            InputId j = tr.input_to[static_cast<size_t>(i)];
            if (tr.output_to[static_cast<size_t>(m1.output_of(a, i))] != m2.output_of(b, j))
                return {false, word_to(static_cast<std::int32_t>(head), i)};
            if (visited.insert(key(m1.next(a, i), m2.next(b, j))).second)
                order.push_back({m1.next(a, i), m2.next(b, j), static_cast<std::int32_t>(head), i});
        }
    }
    return {true, {}};
}

/// Partition refinement on the reachable part; one state per equivalence
/// class, named after the lowest-index representative.
inline MealyMachine minimize(const MealyMachine& m) {
    detail::require_complete(m, "minimize");

    std::vector<bool> keep = reachable_states(m);
    std::vector<StateId> dense(static_cast<size_t>(m.num_states()), NO_STATE);
    std::vector<StateId> states;
    for (StateId q = 0; q < m.num_states(); ++q)
        if (keep[static_cast<size_t>(q)]) {
            dense[static_cast<size_t>(q)] = static_cast<StateId>(states.size());
            states.push_back(q);
        }

    const auto k = static_cast<size_t>(m.num_inputs());
    std::vector<std::int32_t> block(states.size());
    {
        std::map<std::vector<OutputId>, std::int32_t> rows;
        for (size_t s = 0; s < states.size(); ++s) {
            std::vector<OutputId> row(k);
            for (size_t i = 0; i < k; ++i)
                row[i] = m.output_of(states[s], static_cast<InputId>(i));
            block[s] = rows.emplace(std::move(row), static_cast<std::int32_t>(rows.size()))
                           .first->second;
        }
    }

    for (;;) {
        std::map<std::vector<std::int32_t>, std::int32_t> sigs;
        std::vector<std::int32_t> next(states.size());
        for (size_t s = 0; s < states.size(); ++s) {
            std::vector<std::int32_t> sig;
            sig.reserve(k + 1);
            sig.push_back(block[s]);
            for (size_t i = 0; i < k; ++i)
                sig.push_back(block[static_cast<size_t>(
                    dense[static_cast<size_t>(m.next(states[s], static_cast<InputId>(i)))])]);
            next[s] = sigs.emplace(std::move(sig), static_cast<std::int32_t>(sigs.size()))
                          .first->second;
        }
        bool stable = sigs.size() == static_cast<size_t>(
                          1 + *std::max_element(block.begin(), block.end()));
        block = std::move(next);
        if (stable) break;
    }

    // Order classes by their lowest original state index.
    std::int32_t num_blocks = 1 + *std::max_element(block.begin(), block.end());
    std::vector<StateId> rep(static_cast<size_t>(num_blocks), NO_STATE);
    std::vector<StateId> block_order;
    for (size_t s = 0; s < states.size(); ++s)
        if (rep[static_cast<size_t>(block[s])] == NO_STATE) {
            rep[static_cast<size_t>(block[s])] = static_cast<StateId>(s);
            block_order.push_back(static_cast<StateId>(block[s]));
        }
    std::vector<StateId> new_id(static_cast<size_t>(num_blocks));
    for (size_t r = 0; r < block_order.size(); ++r)
        new_id[static_cast<size_t>(block_order[r])] = static_cast<StateId>(r);

    std::vector<std::string> names(static_cast<size_t>(num_blocks));
    std::vector<MealyMachine::Transition> table(static_cast<size_t>(num_blocks) * k);
    for (std::int32_t b = 0; b < num_blocks; ++b) {
        StateId s = rep[static_cast<size_t>(b)];
        names[static_cast<size_t>(new_id[static_cast<size_t>(b)])] = m.state_name(states[static_cast<size_t>(s)]);
        for (size_t i = 0; i < k; ++i) {
            auto t = m.transition(states[static_cast<size_t>(s)], static_cast<InputId>(i));
            std::int32_t tb = block[static_cast<size_t>(dense[static_cast<size_t>(t.next)])];
            table[static_cast<size_t>(new_id[static_cast<size_t>(b)]) * k + i] = {
                t.output, new_id[static_cast<size_t>(tb)]};
        }
    }
    StateId init = new_id[static_cast<size_t>(block[static_cast<size_t>(dense[static_cast<size_t>(m.initial())])])];
    return MealyMachine(m.inputs(), m.outputs(), std::move(names), init, std::move(table));
}

/// Samples a complete machine with exactly n reachable, pairwise
/// inequivalent states; deterministic in seed. Each attempt plants a random
/// spanning arborescence (so every draw is reachable; pure uniform draws are
/// almost never reachable once n outgrows k) and fills the remaining
/// transitions uniformly; minimality is left to rejection, capped.
inline MealyMachine random_machine(std::int32_t n, std::int32_t k, std::int32_t p,
                                   std::uint64_t seed, std::int32_t max_attempts = 10000) {
    if (n < 1 || k < 1 || p < 2) throw std::invalid_argument("random_machine requires n>=1, k>=1, p>=2");

    Alphabet inputs;
    for (std::int32_t i = 0; i < k; ++i)
        inputs.intern(k <= 26 ? std::string(1, static_cast<char>('a' + i)) : "in" + std::to_string(i));
    Alphabet outputs;
    for (std::int32_t o = 0; o < p; ++o) outputs.intern(std::to_string(o));
    std::vector<std::string> names;
    for (std::int32_t q = 0; q < n; ++q) names.push_back("s" + std::to_string(q));

    std::mt19937_64 rng(seed);
    std::uniform_int_distribution<std::int32_t> next_dist(0, n - 1);
    std::uniform_int_distribution<std::int32_t> out_dist(0, p - 1);

    for (std::int32_t attempt = 0; attempt < max_attempts; ++attempt) {
        std::vector<MealyMachine::Transition> table(static_cast<size_t>(n) * static_cast<size_t>(k));

        std::vector<StateId> order(static_cast<size_t>(n));
        std::iota(order.begin(), order.end(), 0);
        std::shuffle(order.begin() + 1, order.end(), rng);
        std::vector<std::pair<StateId, InputId>> slots;
        for (InputId i = 0; i < k; ++i) slots.emplace_back(0, i);
        for (std::int32_t j = 1; j < n; ++j) {
            std::uniform_int_distribution<std::size_t> pick(0, slots.size() - 1);
            std::size_t at = pick(rng);
            auto [src, in] = slots[at];
            slots[at] = slots.back();
            slots.pop_back();
            table[static_cast<size_t>(src) * static_cast<size_t>(k) + static_cast<size_t>(in)] = {
                out_dist(rng), order[static_cast<size_t>(j)]};
            for (InputId i = 0; i < k; ++i) slots.emplace_back(order[static_cast<size_t>(j)], i);
        }
        for (auto& t : table)
            if (!t.defined()) t = {out_dist(rng), next_dist(rng)};

        MealyMachine m(inputs, outputs, names, 0, std::move(table));
        if (minimize(m).num_states() != n) continue;
        return m;
    }
    throw Error("random_machine: no minimal machine with " + std::to_string(n) +
                " states found in " + std::to_string(max_attempts) + " attempts");
}

} // namespace apartlearn
