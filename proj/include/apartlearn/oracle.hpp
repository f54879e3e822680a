#pragma once

#include <random>

#include "log.hpp"
#include "mealy.hpp"

namespace apartlearn {

struct EqResult {
    bool equivalent = false;
    Word counterexample;     // empty when equivalent
    bool approximate = false; // yes was concluded from a finite test budget
};

/// What the learner is allowed to ask. `step`/`reset` expose the adaptive
/// query interface; `output_query` is the classic reset-then-word form.
class Teacher {
public:
    virtual ~Teacher() = default;

    virtual const Alphabet& input_alphabet() const = 0;
    virtual const Alphabet& output_alphabet() const = 0;

    virtual void reset() = 0;
    virtual OutputId step(InputId input) = 0;

    virtual OutputWord output_query(std::span<const InputId> word) {
        reset();
        OutputWord out;
        out.reserve(word.size());
        for (InputId i : word) out.push_back(step(i));
        return out;
    }

    virtual EqResult equivalence_query(const MealyMachine& hypothesis) = 0;
};

enum class SulPhase { learning, testing };

struct QueryCounters {
    std::uint64_t resets = 0;
    std::uint64_t symbols = 0;
};

/// Simulated system-under-learning: a hidden complete machine driven through
/// reset/step, with separate reset/symbol accounting for the learning and
/// testing phases.
class SulSession {
public:
    explicit SulSession(const MealyMachine& machine) : machine_(&machine) {
        detail::require_complete(machine, "SulSession");
        current_ = machine.initial();
    }

    void reset() {
        current_ = machine_->initial();
        ++counters().resets;
    }

    OutputId step(InputId input) {
        ++counters().symbols;
        auto t = machine_->transition(current_, input);
        current_ = t.next;
        return t.output;
    }

    void set_phase(SulPhase phase) { phase_ = phase; }
    SulPhase phase() const { return phase_; }

    const QueryCounters& learning_counters() const { return learn_; }
    const QueryCounters& testing_counters() const { return test_; }

    const MealyMachine& machine() const { return *machine_; }

private:
    QueryCounters& counters() { return phase_ == SulPhase::learning ? learn_ : test_; }

    const MealyMachine* machine_;
    StateId current_;
    SulPhase phase_ = SulPhase::learning;
    QueryCounters learn_;
    QueryCounters test_;
};

struct EqOracleConfig {
    enum class Kind { exact, random_walk };
    Kind kind = Kind::exact;
    std::int32_t extra_states = 10;
    std::int32_t infix_length = 10;
    std::uint64_t budget = 10000; // passing tests before approximate acceptance
    std::uint64_t seed = 0;
};

/// White-box oracle: product search against the hidden machine, returning a
/// shortest counterexample. Costs no SUL interaction.
inline EqResult exact_equivalence_query(const MealyMachine& hidden, const MealyMachine& hypothesis) {
    auto r = bisimilar(hidden, hypothesis);
    if (r.equivalent) return {true, {}, false};
    // sanity: the word must actually separate the two machines
    auto a = hidden.transfer(r.counterexample);
    auto b = hypothesis.transfer(r.counterexample);
    if (a.outputs == b.outputs) throw Error("exact oracle produced a non-separating word");
    return {false, std::move(r.counterexample), false};
}

namespace detail {

// Shortest separating word per unordered hypothesis state pair, computed by a
// reverse BFS over the pair graph. Pairs that stay equivalent keep no word.
class SeparatorTable {
public:
    explicit SeparatorTable(const MealyMachine& m) : m_(&m), n_(m.num_states()) {
        first_input_.assign(static_cast<size_t>(n_) * static_cast<size_t>(n_), NO_INPUT);
        std::deque<std::pair<StateId, StateId>> queue;
        for (StateId p = 0; p < n_; ++p)
            for (StateId q = static_cast<StateId>(p + 1); q < n_; ++q)
                for (InputId i = 0; i < m.num_inputs(); ++i)
                    if (m.output_of(p, i) != m.output_of(q, i)) {
                        at(p, q) = i;
                        queue.emplace_back(p, q);
                        break;
                    }
        // reverse edges: (p,q) -i-> (p',q') means separating (p',q') extends to (p,q)
        std::vector<std::vector<std::pair<std::uint32_t, InputId>>> rev(
            static_cast<size_t>(n_) * static_cast<size_t>(n_));
        for (StateId p = 0; p < n_; ++p)
            for (StateId q = static_cast<StateId>(p + 1); q < n_; ++q)
                for (InputId i = 0; i < m.num_inputs(); ++i) {
                    StateId np = m.next(p, i), nq = m.next(q, i);
                    if (np == nq) continue;
                    rev[idx(std::min(np, nq), std::max(np, nq))].emplace_back(idx(p, q), i);
                }
        while (!queue.empty()) {
            auto [p, q] = queue.front();
            queue.pop_front();
            for (auto [pair_idx, i] : rev[idx(p, q)]) {
                if (first_input_[pair_idx] != NO_INPUT) continue;
                first_input_[pair_idx] = i;
                queue.emplace_back(static_cast<StateId>(pair_idx / static_cast<std::uint32_t>(n_)),
                                   static_cast<StateId>(pair_idx % static_cast<std::uint32_t>(n_)));
            }
        }
    }

    Word separator(StateId p, StateId q) const {
        Word w;
        while (p != q) {
            InputId i = first_input_[idx(std::min(p, q), std::max(p, q))];
            if (i == NO_INPUT) return w; // equivalent pair: no suffix
            w.push_back(i);
            if (m_->output_of(p, i) != m_->output_of(q, i)) return w;
            StateId np = m_->next(p, i), nq = m_->next(q, i);
            p = np;
            q = nq;
        }
        return w;
    }

private:
    std::uint32_t idx(StateId p, StateId q) const {
        return static_cast<std::uint32_t>(p) * static_cast<std::uint32_t>(n_) +
               static_cast<std::uint32_t>(q);
    }
    InputId& at(StateId p, StateId q) { return first_input_[idx(p, q)]; }

    const MealyMachine* m_;
    StateId n_;
    std::vector<InputId> first_input_;
};

inline std::vector<Word> access_sequences(const MealyMachine& m) {
    std::vector<Word> acc(static_cast<size_t>(m.num_states()));
    std::vector<bool> seen(static_cast<size_t>(m.num_states()), false);
    std::deque<StateId> queue{m.initial()};
    seen[static_cast<size_t>(m.initial())] = true;
    while (!queue.empty()) {
        StateId q = queue.front();
        queue.pop_front();
        for (InputId i = 0; i < m.num_inputs(); ++i) {
            StateId nq = m.next(q, i);
            if (seen[static_cast<size_t>(nq)]) continue;
            seen[static_cast<size_t>(nq)] = true;
            acc[static_cast<size_t>(nq)] = acc[static_cast<size_t>(q)];
            acc[static_cast<size_t>(nq)].push_back(i);
            queue.push_back(nq);
        }
    }
    return acc;
}

} // namespace detail

/// Randomized conformance testing in the spirit of a state cover plus random
/// infix plus distinguishing suffix. Tests run on the SUL in testing phase;
/// after `budget` passing tests the hypothesis is accepted approximately.
inline EqResult random_walk_equivalence_query(const EqOracleConfig& cfg, SulSession& sul,
                                              const MealyMachine& hypothesis,
                                              std::mt19937_64& rng) {
    detail::require_complete(hypothesis, "random_walk_equivalence_query");
    auto access = detail::access_sequences(hypothesis);
    detail::SeparatorTable separators(hypothesis);

    std::uniform_int_distribution<StateId> state_dist(0, hypothesis.num_states() - 1);
    std::uniform_int_distribution<InputId> input_dist(0, hypothesis.num_inputs() - 1);
    // extra_states and infix_length jointly bound the random middle section;
    // this approximates a conformance suite probing up to that many states
    // beyond the hypothesis.
    std::uniform_int_distribution<std::int32_t> infix_dist(
        0, cfg.extra_states + cfg.infix_length);

    for (std::uint64_t test = 0; test < cfg.budget; ++test) {
        Word word = access[static_cast<size_t>(state_dist(rng))];
        std::int32_t infix = infix_dist(rng);
        for (std::int32_t j = 0; j < infix; ++j) word.push_back(input_dist(rng));
        if (hypothesis.num_states() > 1) {
            StateId p = state_dist(rng), q = state_dist(rng);
            if (p != q) {
                Word sep = separators.separator(p, q);
                word.insert(word.end(), sep.begin(), sep.end());
            }
        }

        sul.reset();
        StateId hyp_state = hypothesis.initial();
        for (std::size_t j = 0; j < word.size(); ++j) {
            OutputId actual = sul.step(word[j]);
            auto predicted = hypothesis.transition(hyp_state, word[j]);
            if (actual != predicted.output) {
                Word ce(word.begin(), word.begin() + static_cast<std::ptrdiff_t>(j) + 1);
                return {false, std::move(ce), false};
            }
            hyp_state = predicted.next;
        }
    }
    log_msg(LogLevel::warn, "equivalence oracle budget of " + std::to_string(cfg.budget) +
                                " tests exhausted; accepting hypothesis approximately");
    return {true, {}, true};
}

/// Teacher backed by a hidden complete machine, with the equivalence oracle
/// chosen by configuration. Owns the session and its counters.
class SimulatorTeacher : public Teacher {
public:
    SimulatorTeacher(MealyMachine hidden, EqOracleConfig cfg = {})
        : hidden_(std::move(hidden)), cfg_(cfg), session_(hidden_),
          rng_(detail::mix_seed(cfg.seed)) {}

    SimulatorTeacher(const SimulatorTeacher&) = delete;
    SimulatorTeacher& operator=(const SimulatorTeacher&) = delete;

    const Alphabet& input_alphabet() const override { return hidden_.inputs(); }
    const Alphabet& output_alphabet() const override { return hidden_.outputs(); }

    void reset() override { session_.reset(); }
    OutputId step(InputId input) override { return session_.step(input); }

    EqResult equivalence_query(const MealyMachine& hypothesis) override {
        if (cfg_.kind == EqOracleConfig::Kind::exact)
            return exact_equivalence_query(hidden_, hypothesis);
        session_.set_phase(SulPhase::testing);
        EqResult r = random_walk_equivalence_query(cfg_, session_, hypothesis, rng_);
        session_.set_phase(SulPhase::learning);
        return r;
    }

    const SulSession& session() const { return session_; }
    const MealyMachine& hidden() const { return hidden_; }

private:
    MealyMachine hidden_;
    EqOracleConfig cfg_;
    SulSession session_;
    std::mt19937_64 rng_;
};

} // namespace apartlearn
