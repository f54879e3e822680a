#pragma once

#include <deque>
#include <set>
#include <span>
#include <sstream>
#include <unordered_map>

#include "core.hpp"
#include "dot.hpp"

namespace apartlearn {

enum class FrontierKind { isolated, identified, ambiguous };

struct FrontierStatus {
    FrontierKind kind;
    /// Basis states not apart from the node, ascending by node index.
    /// Empty when isolated, exactly one entry when identified.
    std::vector<NodeId> candidates;

    NodeId identified_as() const { return candidates.size() == 1 ? candidates[0] : NO_NODE; }
};

/// The three-part progress measure over basis S and frontier F:
/// |S|(|S|+1)/2 + #defined basis transitions + #apart pairs in S x F.
struct NormSnapshot {
    std::int64_t sq = 0;
    std::int64_t sdef = 0;
    std::int64_t sapart = 0;
    std::int64_t total = 0;
};

/// A tree-shaped partial Mealy machine recording every teacher response,
/// with basis/frontier bookkeeping and a memoized apartness relation.
///
/// Nodes are only ever added. The basis is a subtree containing the root
/// (the root is in the basis from construction); the frontier is exactly the
/// set of immediate non-basis successors of basis nodes. Single writer;
/// read-only queries may interleave between mutations.
class ObservationTree {
public:
    explicit ObservationTree(std::int32_t num_inputs) : k_(num_inputs) {
        if (num_inputs < 1) throw std::invalid_argument("observation tree needs at least one input");
        nodes_.push_back(Node{NO_NODE, NO_INPUT, NO_OUTPUT, 0, Mark::basis, 0});
        edges_.resize(static_cast<size_t>(k_), Edge{});
        basis_.push_back(0);
    }

    std::int32_t num_inputs() const { return k_; }
    std::int32_t num_nodes() const { return static_cast<std::int32_t>(nodes_.size()); }
    NodeId root() const { return 0; }

    NodeId child(NodeId q, InputId i) const { return edge(q, i).child; }
    OutputId output(NodeId q, InputId i) const { return edge(q, i).output; }
    bool defined(NodeId q, InputId i) const { return edge(q, i).child != NO_NODE; }

    NodeId parent(NodeId q) const { return node(q).parent; }
    InputId parent_input(NodeId q) const { return node(q).parent_input; }
    OutputId parent_output(NodeId q) const { return node(q).parent_output; }
    std::int32_t depth(NodeId q) const { return node(q).depth; }

    bool is_basis(NodeId q) const { return node(q).mark == Mark::basis; }
    bool in_frontier(NodeId q) const { return node(q).mark == Mark::frontier; }

    /// Basis nodes, ascending by node index (the root is always first).
    const std::vector<NodeId>& basis() const { return basis_; }
    const std::set<NodeId>& frontier() const { return frontier_; }

    /// The unique input word leading from the root to q.
    Word access(NodeId q) const {
        Word w(static_cast<size_t>(depth(q)));
        for (auto at = q; at != root(); at = parent(at)) w[static_cast<size_t>(depth(at)) - 1] = parent_input(at);
        return w;
    }

    /// Follows `word` from `start`; NO_NODE if it leaves the defined part.
    NodeId walk(NodeId start, std::span<const InputId> word) const {
        NodeId at = start;
        for (InputId i : word) {
            at = child(at, i);
            if (at == NO_NODE) return NO_NODE;
        }
        return at;
    }

    /// Outputs along a fully defined word from `start`.
    OutputWord outputs_along(NodeId start, std::span<const InputId> word) const {
        OutputWord out;
        out.reserve(word.size());
        NodeId at = start;
        for (InputId i : word) {
            if (!defined(at, i)) throw Error("outputs_along: word leaves the tree");
            out.push_back(output(at, i));
            at = child(at, i);
        }
        return out;
    }

    /// Records a query response: walks `word` from `start`, creating nodes as
    /// needed, and returns the final node. An existing edge whose output
    /// disagrees with `outputs` raises OutputConflictError (the teacher is
    /// assumed deterministic).
    NodeId extend(NodeId start, std::span<const InputId> word, std::span<const OutputId> outputs) {
        if (word.size() != outputs.size())
            throw std::invalid_argument("extend: word and outputs must have equal length");
        NodeId at = start;
        NodeId attach = NO_NODE;
        for (std::size_t j = 0; j < word.size(); ++j) {
            InputId i = word[j];
            OutputId o = outputs[j];
            const Edge e = edge(at, i);
            if (e.child != NO_NODE) {
                if (e.output != o) throw OutputConflictError(at, i, e.output, o);
                at = e.child;
                continue;
            }
            if (attach == NO_NODE) {
                attach = at;
                ++version_;
            }
            NodeId c = new_node(at, i, o);
            edges_[edge_index(at, i)] = Edge{o, c};
            if (is_basis(at)) {
                nodes_[static_cast<size_t>(c)].mark = Mark::frontier;
                frontier_.insert(c);
            }
            at = c;
        }
        if (attach != NO_NODE)
            for (NodeId up = attach; up != NO_NODE; up = parent(up))
                nodes_[static_cast<size_t>(up)].subtree_version = version_;
        return at;
    }

    /// Moves an isolated frontier node into the basis; its children become
    /// frontier. Promoting a non-isolated node is a learner bug.
    void promote(NodeId q) {
        if (!in_frontier(q)) throw std::invalid_argument("promote: node is not in the frontier");
        for (NodeId b : basis_)
            if (!apart(q, b))
                throw NotIsolatedError("promote: node " + std::to_string(q) +
                                       " is not apart from basis node " + std::to_string(b));
        frontier_.erase(q);
        nodes_[static_cast<size_t>(q)].mark = Mark::basis;
        basis_.insert(std::lower_bound(basis_.begin(), basis_.end(), q), q);
        for (InputId i = 0; i < k_; ++i) {
            NodeId c = child(q, i);
            if (c != NO_NODE) {
                nodes_[static_cast<size_t>(c)].mark = Mark::frontier;
                frontier_.insert(c);
            }
        }
    }

    /// Witness word for q # p if the current tree contains one. Memoized;
    /// a negative answer is re-examined only after either subtree has grown.
    std::optional<Word> is_apart(NodeId q, NodeId p) const {
        const PairRec* rec = apart_rec(q, p);
        if (!rec || !rec->apart) return std::nullopt;
        return materialize_witness(std::min(q, p), *rec);
    }

    bool apart(NodeId q, NodeId p) const {
        const PairRec* rec = apart_rec(q, p);
        return rec && rec->apart;
    }

    /// One-shot walk that bypasses the memo table. Used for throwaway pairs
    /// (consistency checking visits every tree node once).
    bool apart_uncached(NodeId q, NodeId p) const {
        if (q == p) return false;
        return walk_pair(std::min(q, p), std::max(q, p)).apart;
    }

    FrontierStatus frontier_status(NodeId q) const {
        if (!in_frontier(q)) throw std::invalid_argument("frontier_status: node is not in the frontier");
        FrontierStatus st{FrontierKind::ambiguous, {}};
        for (NodeId b : basis_)
            if (!apart(q, b)) st.candidates.push_back(b);
        st.kind = st.candidates.empty()    ? FrontierKind::isolated
                  : st.candidates.size() == 1 ? FrontierKind::identified
                                              : FrontierKind::ambiguous;
        return st;
    }

    NormSnapshot norm() const {
        NormSnapshot n;
        auto s = static_cast<std::int64_t>(basis_.size());
        n.sq = s * (s + 1) / 2;
        for (NodeId b : basis_)
            for (InputId i = 0; i < k_; ++i)
                if (defined(b, i)) ++n.sdef;
        for (NodeId b : basis_)
            for (NodeId f : frontier_)
                if (apart(b, f)) ++n.sapart;
        n.total = n.sq + n.sdef + n.sapart;
        return n;
    }

    std::uint64_t version() const { return version_; }
    std::uint64_t subtree_version(NodeId q) const { return node(q).subtree_version; }

    /// Debug dump of the tree edges in the DOT subset, with basis/frontier
    /// membership as node `class` attributes.
    std::string to_dot(const Alphabet& inputs, const Alphabet& outputs) const {
        std::ostringstream out;
        out << "digraph obstree {\n";
        out << "  __start0 [label=\"\", shape=none];\n  __start0 -> t0;\n";
        for (NodeId q = 0; q < num_nodes(); ++q) {
            if (is_basis(q))
                out << "  t" << q << " [class=\"basis\"];\n";
            else if (in_frontier(q))
                out << "  t" << q << " [class=\"frontier\"];\n";
        }
        for (NodeId q = 0; q < num_nodes(); ++q)
            for (InputId i = 0; i < k_; ++i)
                if (defined(q, i))
                    out << "  t" << q << " -> t" << child(q, i) << " [label=\""
                        << inputs.name(i) << "/" << outputs.name(output(q, i)) << "\"];\n";
        out << "}\n";
        return out.str();
    }

private:
    enum class Mark : std::uint8_t { other, basis, frontier };

    struct Node {
        NodeId parent;
        InputId parent_input;
        OutputId parent_output;
        std::int32_t depth;
        Mark mark;
        std::uint64_t subtree_version;
    };

    struct Edge {
        OutputId output = NO_OUTPUT;
        NodeId child = NO_NODE;
    };

    // Memoized apartness fact for an unordered node pair. Apart facts are
    // permanent (the tree only grows); not-apart facts carry the version at
    // which the pair's subtrees were last compared. The stored divergence
    // point is on the lower node's side.
    struct PairRec {
        bool apart = false;
        NodeId div_node = NO_NODE;
        InputId div_input = NO_INPUT;
        std::uint64_t checked_version = 0;
    };

    const Node& node(NodeId q) const { return nodes_.at(static_cast<size_t>(q)); }

    std::size_t edge_index(NodeId q, InputId i) const {
        return static_cast<size_t>(q) * static_cast<size_t>(k_) + static_cast<size_t>(i);
    }
    const Edge& edge(NodeId q, InputId i) const { return edges_[edge_index(q, i)]; }

    NodeId new_node(NodeId parent, InputId in, OutputId out) {
        auto id = static_cast<NodeId>(nodes_.size());
        nodes_.push_back(Node{parent, in, out, node(parent).depth + 1, Mark::other, version_});
        edges_.resize(edges_.size() + static_cast<size_t>(k_), Edge{});
        return id;
    }

    // Simultaneous breadth-first walk over the intersection of the two
    // subtrees' defined domains; stops at the first output difference, so the
    // recorded witness is shortest in BFS order. Pairs never repeat because
    // both sides are trees.
    PairRec walk_pair(NodeId lo, NodeId hi) const {
        std::deque<std::pair<NodeId, NodeId>> queue{{lo, hi}};
        while (!queue.empty()) {
            auto [a, b] = queue.front();
            queue.pop_front();
            for (InputId i = 0; i < k_; ++i) {
                const Edge& ea = edge(a, i);
                const Edge& eb = edge(b, i);
                if (ea.child == NO_NODE || eb.child == NO_NODE) continue;
                if (ea.output != eb.output) return PairRec{true, a, i, version_};
                queue.emplace_back(ea.child, eb.child);
            }
        }
        return PairRec{false, NO_NODE, NO_INPUT, version_};
    }

    const PairRec* apart_rec(NodeId q, NodeId p) const {
        if (q == p) return nullptr;
        NodeId lo = std::min(q, p), hi = std::max(q, p);
        auto key = detail::pair_key(lo, hi);
        auto it = memo_.find(key);
        if (it != memo_.end()) {
            if (it->second.apart) return &it->second;
            if (it->second.checked_version >=
                std::max(subtree_version(lo), subtree_version(hi)))
                return nullptr;
        }
        PairRec rec = walk_pair(lo, hi);
        auto& slot = memo_[key];
        slot = rec;
        return rec.apart ? &slot : nullptr;
    }

    // Witness = inputs from `lo` down to the divergence node, then the
    // diverging input. The same relative word is defined under both sides.
    Word materialize_witness(NodeId lo, const PairRec& rec) const {
        Word w;
        for (NodeId at = rec.div_node; at != lo; at = parent(at)) w.push_back(parent_input(at));
        std::reverse(w.begin(), w.end());
        w.push_back(rec.div_input);
        return w;
    }

    std::int32_t k_;
    std::vector<Node> nodes_;
    std::vector<Edge> edges_;
    std::vector<NodeId> basis_;
    std::set<NodeId> frontier_;
    std::uint64_t version_ = 0;
    mutable std::unordered_map<std::uint64_t, PairRec> memo_;
};

} // namespace apartlearn
