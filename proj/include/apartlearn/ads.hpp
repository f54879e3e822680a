#pragma once

#include <boost/multiprecision/cpp_int.hpp>

#include "obs_tree.hpp"

namespace apartlearn {

/// Exact rational scores; float ties would make the chosen inputs unstable
/// across platforms.
using Rational = boost::multiprecision::cpp_rational;

/// One node of an adaptive distinguishing sequence: apply `input`, then
/// descend along the child matching the observed output. A leaf (no input)
/// means no further expected reward. `states` tracks where the still-viable
/// candidates' runs have arrived in the observation tree.
struct AdsNode {
    std::vector<NodeId> states;
    InputId input = NO_INPUT;
    Rational score = 0;
    std::vector<std::pair<OutputId, AdsNode>> children; // ascending by output

    bool is_leaf() const { return input == NO_INPUT; }

    const AdsNode* child_for(OutputId o) const {
        for (const auto& [out, node] : children)
            if (out == o) return &node;
        return nullptr;
    }
};

namespace detail {

struct AdsBranch {
    InputId input = NO_INPUT;
    Rational score = 0;
    // per observed output: the successor state set
    std::vector<std::pair<OutputId, std::vector<NodeId>>> groups;
};

// Expected number of new apartness pairs when running the best adaptive
// experiment on U, assuming the unknown state behaves like a uniformly random
// member of the defined part. A set that can never split any further (in
// particular any singleton) scores 0, so the recursion only descends while at
// least two candidate runs are alive.
inline AdsBranch best_ads_branch(const ObservationTree& tree, std::span<const NodeId> states) {
    AdsBranch best;
    if (states.size() <= 1) return best;
    for (InputId i = 0; i < tree.num_inputs(); ++i) {
        std::vector<std::pair<OutputId, std::vector<NodeId>>> groups;
        std::size_t defined = 0;
        for (NodeId q : states) {
            NodeId c = tree.child(q, i);
            if (c == NO_NODE) continue;
            ++defined;
            OutputId o = tree.output(q, i);
            auto it = std::find_if(groups.begin(), groups.end(),
                                   [o](const auto& g) { return g.first == o; });
            if (it == groups.end()) {
                groups.push_back({o, {c}});
            } else {
                it->second.push_back(c);
            }
        }
        if (defined == 0) continue;
        Rational sum = 0;
        for (const auto& [o, succs] : groups) {
            auto cnt = static_cast<std::int64_t>(succs.size());
            sum += cnt * (Rational(static_cast<std::int64_t>(defined) - cnt) +
                          best_ads_branch(tree, succs).score);
        }
        sum /= static_cast<std::int64_t>(defined);
        if (best.input == NO_INPUT || sum > best.score) {
            std::sort(groups.begin(), groups.end(),
                      [](const auto& a, const auto& b) { return a.first < b.first; });
            best = AdsBranch{i, std::move(sum), std::move(groups)};
        }
    }
    return best;
}

} // namespace detail

/// E(U): the maximal expected number of apartness pairs gained by one
/// adaptive experiment over the candidate set U.
inline Rational expected_reward(const ObservationTree& tree, std::span<const NodeId> states) {
    std::vector<NodeId> set(states.begin(), states.end());
    std::sort(set.begin(), set.end());
    set.erase(std::unique(set.begin(), set.end()), set.end());
    return detail::best_ads_branch(tree, set).score;
}

/// Builds the decision tree attaining E(U). Ties between equally rewarding
/// inputs break toward the lowest input index; a node with no reward left is
/// a leaf.
inline AdsNode build_ads(const ObservationTree& tree, std::span<const NodeId> states) {
    AdsNode node;
    node.states.assign(states.begin(), states.end());
    std::sort(node.states.begin(), node.states.end());
    node.states.erase(std::unique(node.states.begin(), node.states.end()), node.states.end());

    detail::AdsBranch branch = detail::best_ads_branch(tree, node.states);
    node.score = branch.score;
    if (branch.input == NO_INPUT || branch.score == 0) return node;

    node.input = branch.input;
    node.children.reserve(branch.groups.size());
    for (const auto& [o, succs] : branch.groups)
        node.children.emplace_back(o, build_ads(tree, succs));
    return node;
}

} // namespace apartlearn
