#pragma once

#include <chrono>
#include <cmath>
#include <fstream>
#include <iomanip>

#include <json.hpp>

#include "dot.hpp"
#include "learner.hpp"

namespace apartlearn {

struct ExperimentSpec {
    enum class Format { csv, json };

    std::string model_path; // empty when using the random generator
    std::int32_t random_n = 0;
    std::int32_t random_k = 0;
    std::int32_t random_p = 0;

    Variant variant = Variant::plain;
    Policy policy = Policy::strategic;
    EqOracleConfig oracle;
    std::int32_t repeats = 1;
    std::uint64_t seed = 0;
    std::string out_path; // empty = stdout
    Format format = Format::csv;
    bool verbose = false;

    bool random_model() const { return model_path.empty(); }
};

struct MetricsRow {
    std::string model;
    std::int32_t n = 0;
    std::int32_t k = 0;
    std::uint64_t learn_resets = 0;
    std::uint64_t learn_inputs = 0;
    std::uint64_t test_resets = 0;
    std::uint64_t test_inputs = 0;
    std::uint64_t eq_queries = 0;
    bool success = false;
    double wall_ms = 0.0;
};

inline constexpr const char* METRICS_CSV_HEADER =
    "model,n,k,learn_resets,learn_inputs,test_resets,test_inputs,eq_queries,success,wall_ms";

/// Hard ceiling on learning-phase output queries for an n-class target with
/// k inputs and longest counterexample m: the norm bound caps rule
/// applications by 3kn^2, and each of the at most n counterexamples costs one
/// replay plus a logarithmic number of binary-search queries.
inline std::uint64_t learn_resets_ceiling(std::int64_t n, std::int64_t k, std::uint64_t m) {
    std::uint64_t log_term = 1;
    for (std::uint64_t v = std::max<std::uint64_t>(m, 2) * 2 - 1; v > 1; v /= 2) ++log_term;
    return static_cast<std::uint64_t>(3 * k * n * n) + static_cast<std::uint64_t>(n) * (log_term + 1) +
           static_cast<std::uint64_t>(n);
}

namespace detail {

inline std::string csv_field(const std::string& s) {
    if (s.find_first_of(",\"\n") == std::string::npos) return s;
    std::string out = "\"";
    for (char c : s) {
        if (c == '"') out.push_back('"');
        out.push_back(c);
    }
    out.push_back('"');
    return out;
}

} // namespace detail

inline std::string to_csv(const std::vector<MetricsRow>& rows) {
    std::ostringstream out;
    out << METRICS_CSV_HEADER << "\n";
    for (const auto& r : rows) {
        out << detail::csv_field(r.model) << ',' << r.n << ',' << r.k << ',' << r.learn_resets
            << ',' << r.learn_inputs << ',' << r.test_resets << ',' << r.test_inputs << ','
            << r.eq_queries << ',' << (r.success ? "true" : "false") << ',' << std::fixed
            << std::setprecision(3) << r.wall_ms << "\n";
    }
    return out.str();
}

inline nlohmann::json to_json(const std::vector<MetricsRow>& rows) {
    nlohmann::json arr = nlohmann::json::array();
    for (const auto& r : rows)
        arr.push_back({{"model", r.model},
                       {"n", r.n},
                       {"k", r.k},
                       {"learn_resets", r.learn_resets},
                       {"learn_inputs", r.learn_inputs},
                       {"test_resets", r.test_resets},
                       {"test_inputs", r.test_inputs},
                       {"eq_queries", r.eq_queries},
                       {"success", r.success},
                       {"wall_ms", r.wall_ms}});
    return arr;
}

struct AggregateStat {
    std::string model;
    std::string metric;
    double mean = 0.0;
    double stddev = 0.0;
    std::uint64_t min = 0;
    std::uint64_t max = 0;
};

/// Per-model mean, population standard deviation, min and max of each
/// counter, in first-appearance model order.
inline std::vector<AggregateStat> aggregate(const std::vector<MetricsRow>& rows) {
    static constexpr const char* metrics[] = {"learn_resets", "learn_inputs", "test_resets",
                                              "test_inputs", "eq_queries"};
    auto value_of = [](const MetricsRow& r, std::size_t m) -> std::uint64_t {
        switch (m) {
            case 0: return r.learn_resets;
            case 1: return r.learn_inputs;
            case 2: return r.test_resets;
            case 3: return r.test_inputs;
            default: return r.eq_queries;
        }
    };

    std::vector<std::string> order;
    for (const auto& r : rows)
        if (std::find(order.begin(), order.end(), r.model) == order.end())
            order.push_back(r.model);

    std::vector<AggregateStat> out;
    for (const auto& model : order) {
        for (std::size_t m = 0; m < 5; ++m) {
            AggregateStat st{model, metrics[m], 0, 0, UINT64_MAX, 0};
            double sum = 0, sq_sum = 0;
            std::uint64_t count = 0;
            for (const auto& r : rows) {
                if (r.model != model) continue;
                auto v = value_of(r, m);
                sum += static_cast<double>(v);
                sq_sum += static_cast<double>(v) * static_cast<double>(v);
                st.min = std::min(st.min, v);
                st.max = std::max(st.max, v);
                ++count;
            }
            st.mean = sum / static_cast<double>(count);
            double var = sq_sum / static_cast<double>(count) - st.mean * st.mean;
            st.stddev = std::sqrt(std::max(0.0, var));
            out.push_back(st);
        }
    }
    return out;
}

inline std::string format_aggregate(const std::vector<AggregateStat>& stats) {
    std::ostringstream out;
    out << std::left << std::setw(28) << "model" << std::setw(14) << "metric" << std::right
        << std::setw(12) << "mean" << std::setw(12) << "stddev" << std::setw(10) << "min"
        << std::setw(10) << "max" << "\n";
    for (const auto& st : stats) {
        out << std::left << std::setw(28) << st.model << std::setw(14) << st.metric << std::right
            << std::setw(12) << std::fixed << std::setprecision(1) << st.mean << std::setw(12)
            << st.stddev << std::setw(10) << st.min << std::setw(10) << st.max << "\n";
    }
    return out.str();
}

inline std::string default_model_id(const ExperimentSpec& spec) {
    if (spec.random_model())
        return "random-n" + std::to_string(spec.random_n) + "-k" + std::to_string(spec.random_k) +
               "-p" + std::to_string(spec.random_p);
    auto slash = spec.model_path.find_last_of("/\\");
    std::string base =
        slash == std::string::npos ? spec.model_path : spec.model_path.substr(slash + 1);
    auto dot = base.find_last_of('.');
    return dot == std::string::npos ? base : base.substr(0, dot);
}

inline MealyMachine load_experiment_model(const ExperimentSpec& spec,
                                          std::vector<std::string>* warnings = nullptr) {
    if (spec.random_model()) {
        return random_machine(spec.random_n, spec.random_k, spec.random_p,
                              detail::mix_seed(spec.seed));
    }
    std::ifstream in(spec.model_path);
    if (!in) throw Error("cannot open model file '" + spec.model_path + "'");
    std::stringstream buffer;
    buffer << in.rdbuf();
    DotParseResult parsed = parse_dot(buffer.str());
    if (warnings) *warnings = parsed.warnings;
    for (const auto& w : parsed.warnings) log_msg(LogLevel::warn, spec.model_path + ": " + w);
    if (!parsed.machine.is_complete())
        throw Error("model '" + spec.model_path + "' is partial; the teacher needs a complete machine");
    return parsed.machine;
}

/// Runs `repeats` independent learner sessions against the model and collects
/// one metrics row each. A row's seed derives from (spec seed, repeat index),
/// so the full spec determines every randomized component. Successful means
/// the learned machine is bisimilar to the target, checked white-box after
/// the run.
inline std::vector<MetricsRow> run_experiment(const ExperimentSpec& spec) {
    MealyMachine target = load_experiment_model(spec);
    MealyMachine target_min = minimize(target);
    std::string model_id = default_model_id(spec);

    std::vector<MetricsRow> rows;
    for (std::int32_t rep = 0; rep < spec.repeats; ++rep) {
        std::uint64_t run_seed =
            detail::mix_seed(spec.seed ^ detail::mix_seed(static_cast<std::uint64_t>(rep) + 1));
        EqOracleConfig oracle = spec.oracle;
        oracle.seed = run_seed;
        SimulatorTeacher teacher(target, oracle);

        LearnerOptions opts;
        opts.variant = spec.variant;
        opts.policy = spec.policy;
        opts.seed = run_seed;
        if (spec.verbose) {
            std::string id = model_id;
            std::int32_t r = rep;
            opts.event_sink = [id, r](const RuleEvent& ev) {
                nlohmann::json line{{"model", id},
                                    {"repeat", r},
                                    {"rule", "R" + std::to_string(ev.rule)},
                                    {"norm_before", ev.norm_before},
                                    {"norm_after", ev.norm_after},
                                    {"output_queries", ev.output_queries},
                                    {"input_symbols", ev.input_symbols}};
                std::fprintf(stderr, "%s\n", line.dump().c_str());
            };
        }

        auto t0 = std::chrono::steady_clock::now();
        Learner learner(teacher, opts);
        RunReport report = learner.run();
        auto t1 = std::chrono::steady_clock::now();

        MetricsRow row;
        row.model = model_id;
        row.n = target_min.num_states();
        row.k = target.num_inputs();
        row.learn_resets = teacher.session().learning_counters().resets;
        row.learn_inputs = teacher.session().learning_counters().symbols;
        row.test_resets = teacher.session().testing_counters().resets;
        row.test_inputs = teacher.session().testing_counters().symbols;
        row.eq_queries = report.eq_queries;
        row.success = bisimilar(teacher.hidden(), report.hypothesis).equivalent;
        row.wall_ms = std::chrono::duration<double, std::milli>(t1 - t0).count();

        if (row.success &&
            row.learn_resets > learn_resets_ceiling(row.n, row.k, report.max_counterexample_length))
            throw Error("learning cost exceeded the theoretical ceiling on model " + model_id);
        rows.push_back(std::move(row));
    }
    return rows;
}

} // namespace apartlearn
