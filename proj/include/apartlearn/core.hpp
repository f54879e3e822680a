#pragma once

#include <cstdint>
#include <optional>
#include <stdexcept>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

namespace apartlearn {

// Dense integer handles for states, inputs, outputs and tree nodes.
// All hot-path containers are arrays indexed by these.
using StateId = std::int32_t;
using InputId = std::int32_t;
using OutputId = std::int32_t;
using NodeId = std::int32_t;

inline constexpr StateId NO_STATE = -1;
inline constexpr InputId NO_INPUT = -1;
inline constexpr OutputId NO_OUTPUT = -1;
inline constexpr NodeId NO_NODE = -1;

using Word = std::vector<InputId>;
using OutputWord = std::vector<OutputId>;

class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// The teacher answered the same query with two different outputs, or an
/// extension disagrees with an edge already in the observation tree.
class OutputConflictError : public Error {
public:
    OutputConflictError(NodeId node, InputId input, OutputId old_output, OutputId new_output)
        : Error("output conflict at node " + std::to_string(node) + ", input " +
                std::to_string(input) + ": recorded output " + std::to_string(old_output) +
                ", teacher now says " + std::to_string(new_output)),
          node(node), input(input), old_output(old_output), new_output(new_output) {}

    NodeId node;
    InputId input;
    OutputId old_output;
    OutputId new_output;
};

class NotIsolatedError : public Error {
public:
    using Error::Error;
};

class IsolatedFrontierError : public Error {
public:
    using Error::Error;
};

class NoConflictError : public Error {
public:
    using Error::Error;
};

class TeacherInconsistentError : public Error {
public:
    using Error::Error;
};

class BudgetExceededError : public Error {
public:
    using Error::Error;
};

/// Bijective interning of symbol names to dense indices.
class Alphabet {
public:
    Alphabet() = default;

    explicit Alphabet(const std::vector<std::string>& names) {
        for (const auto& n : names) intern(n);
    }

    /// Returns the index of `name`, adding it if unseen.
    InputId intern(std::string_view name) {
        auto it = index_.find(std::string(name));
        if (it != index_.end()) return it->second;
        auto id = static_cast<InputId>(names_.size());
        names_.emplace_back(name);
        index_.emplace(names_.back(), id);
        return id;
    }

    std::optional<std::int32_t> find(std::string_view name) const {
        auto it = index_.find(std::string(name));
        if (it == index_.end()) return std::nullopt;
        return it->second;
    }

    const std::string& name(std::int32_t id) const { return names_.at(static_cast<size_t>(id)); }

    std::int32_t size() const { return static_cast<std::int32_t>(names_.size()); }

    bool operator==(const Alphabet& other) const { return names_ == other.names_; }

    const std::vector<std::string>& names() const { return names_; }

private:
    std::vector<std::string> names_;
    std::unordered_map<std::string, std::int32_t> index_;
};

namespace detail {

inline std::uint64_t pair_key(NodeId a, NodeId b) {
    auto lo = static_cast<std::uint32_t>(a < b ? a : b);
    auto hi = static_cast<std::uint32_t>(a < b ? b : a);
    return (static_cast<std::uint64_t>(hi) << 32) | lo;
}

// splitmix64, used to derive independent sub-seeds from one user seed.
inline std::uint64_t mix_seed(std::uint64_t x) {
    x += 0x9e3779b97f4a7c15ULL;
    x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
    x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
    return x ^ (x >> 31);
}

} // namespace detail

} // namespace apartlearn
