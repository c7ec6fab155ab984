#ifndef QMIDX_SCHEME_HPP
#define QMIDX_SCHEME_HPP

#include <cstdint>
#include <functional>
#include <memory>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "qmidx/error.hpp"

namespace qmidx {

using NodeId = std::size_t;

// Closed left ball B_eps(center) = { x : rho(center, x) <= eps }.
template <typename Point, typename Dist = double>
struct RangeQuery {
    Point center;
    Dist radius{};
};

// Distance oracle plus a declaration of whether it is symmetric.
// Metric-only certification families refuse oracles with symmetric = false.
template <typename Point, typename Dist = double>
struct DistanceOracle {
    std::function<Dist(const Point&, const Point&)> fn;
    bool symmetric = false;

    Dist operator()(const Point& a, const Point& b) const { return fn(a, b); }
};

template <typename Point>
struct Workload {
    std::string domain;
    std::shared_ptr<const std::vector<Point>> points;

    Workload() : points(std::make_shared<const std::vector<Point>>()) {}
    Workload(std::string domain_descriptor, std::vector<Point> dataset)
        : domain(std::move(domain_descriptor)),
          points(std::make_shared<const std::vector<Point>>(std::move(dataset))) {}

    std::size_t size() const noexcept { return points->size(); }
    const Point& operator[](std::size_t i) const { return (*points)[i]; }
};

struct SearchStats {
    std::uint64_t nodes_visited = 0;
    std::uint64_t decisions_evaluated = 0;
    std::uint64_t blocks_opened = 0;
    std::uint64_t points_scanned = 0;
    // Sum of occurrence counts over matches; equals matches.size() unless
    // the dataset carries multiplicities.
    std::uint64_t occurrences_matched = 0;
};

template <typename Dist>
struct Match {
    std::size_t index;
    Dist distance;

    friend bool operator==(const Match&, const Match&) = default;
};

template <typename Dist>
struct SearchResult {
    std::vector<Match<Dist>> matches;
    SearchStats stats;
};

// Membership test for left balls: returns the distance when x is inside.
template <typename Point, typename Dist>
auto ball_membership(DistanceOracle<Point, Dist> dist)
{
    return [dist = std::move(dist)](const RangeQuery<Point, Dist>& q, const Point& x) -> std::optional<Dist> {
        Dist d = dist(q.center, x);
        if (d <= q.radius)
            return d;
        return std::nullopt;
    };
}

// Rooted tree with leaf blocks (dataset indices) and, on each inner node, a
// decision function selecting a subset of children by position.
template <typename Point, typename Query>
class IndexScheme {
public:
    // Appends admitted child positions (indices into `children`) to `out`.
    using Decision = std::function<void(const Query&, std::vector<std::size_t>& out)>;

    struct Node {
        std::optional<NodeId> parent;
        std::vector<NodeId> children;
        std::vector<std::size_t> block;                  // leaves only: B_t intersected with X
        std::function<bool(const Point&)> domain;        // optional description of B_t within the domain
        Decision decide;                                 // inner nodes only
    };

    IndexScheme(std::shared_ptr<const std::vector<Point>> data, std::vector<Node> nodes)
        : data_(std::move(data)), nodes_(std::move(nodes))
    {
        validate();
    }

    NodeId root() const noexcept { return 0; }
    std::size_t node_count() const noexcept { return nodes_.size(); }
    const Node& node(NodeId t) const { return nodes_.at(t); }
    bool is_leaf(NodeId t) const { return nodes_.at(t).children.empty(); }
    const std::vector<Point>& data() const noexcept { return *data_; }
    const std::shared_ptr<const std::vector<Point>>& shared_data() const noexcept { return data_; }
    const std::vector<Node>& nodes() const noexcept { return nodes_; }

    // Root-to-node path s_0 = root, ..., s_m = t.
    std::vector<NodeId> path_to(NodeId t) const
    {
        std::vector<NodeId> path{t};
        while (nodes_.at(path.back()).parent)
            path.push_back(*nodes_[path.back()].parent);
        return {path.rbegin(), path.rend()};
    }

private:
    void validate() const
    {
        if (nodes_.empty())
            throw BuildError("index scheme needs a root node");
        if (nodes_[0].parent)
            throw BuildError("node 0 must be the root");
        std::vector<int> seen_as_child(nodes_.size(), 0);
        for (NodeId t = 0; t < nodes_.size(); ++t) {
            const auto& n = nodes_[t];
            if (t != 0 && !n.parent)
                throw BuildError("node " + std::to_string(t) + " has no parent");
            for (NodeId c : n.children) {
                if (c >= nodes_.size() || c == 0)
                    throw BuildError("node " + std::to_string(t) + " has an invalid child");
                if (nodes_[c].parent != t)
                    throw BuildError("child " + std::to_string(c) + " does not point back to " + std::to_string(t));
                if (seen_as_child[c]++)
                    throw BuildError("node " + std::to_string(c) + " has two parents");
            }
            if (!n.children.empty() && !n.decide)
                throw BuildError("inner node " + std::to_string(t) + " has no decision function");
            for (std::size_t i : n.block)
                if (i >= data_->size())
                    throw BuildError("leaf " + std::to_string(t) + " references a point outside the dataset");
        }
        // Parent links are consistent and unique, so every node reaches the
        // root iff its depth stays below the node count.
        for (NodeId t = 1; t < nodes_.size(); ++t) {
            std::size_t depth = 0;
            for (NodeId u = t; nodes_[u].parent; u = *nodes_[u].parent)
                if (++depth > nodes_.size())
                    throw BuildError("cycle through node " + std::to_string(t));
        }
        std::vector<bool> covered(data_->size(), false);
        for (const auto& n : nodes_)
            if (n.children.empty())
                for (std::size_t i : n.block)
                    covered[i] = true;
        for (std::size_t i = 0; i < covered.size(); ++i)
            if (!covered[i])
                throw BuildError("dataset point " + std::to_string(i) + " is in no leaf block");
    }

    std::shared_ptr<const std::vector<Point>> data_;
    std::vector<Node> nodes_;
};

// Level-by-level traversal: A_0 = {root}; inner nodes expand through their
// decision functions; leaf blocks are scanned with the exact predicate.
// Points shared by several blocks are reported once.
template <typename Point, typename Query, typename Member>
auto answer(const IndexScheme<Point, Query>& scheme, const Query& q, Member&& member)
{
    using Dist = typename std::invoke_result_t<Member&, const Query&, const Point&>::value_type;
    SearchResult<Dist> result;
    std::vector<bool> visited(scheme.data().size(), false);
    std::vector<NodeId> level{scheme.root()}, next;
    std::vector<std::size_t> admitted;
    while (!level.empty()) {
        next.clear();
        for (NodeId t : level) {
            ++result.stats.nodes_visited;
            const auto& node = scheme.node(t);
            if (!node.children.empty()) {
                admitted.clear();
                node.decide(q, admitted);
                ++result.stats.decisions_evaluated;
                for (std::size_t pos : admitted) {
                    if (pos >= node.children.size())
                        throw StructuralError("decision at node " + std::to_string(t) + " selected position " +
                                              std::to_string(pos) + ", which is not a child");
                    next.push_back(node.children[pos]);
                }
                continue;
            }
            ++result.stats.blocks_opened;
            for (std::size_t i : node.block) {
                if (visited[i])
                    continue;
                visited[i] = true;
                ++result.stats.points_scanned;
                if (auto d = member(q, scheme.data()[i]))
                    result.matches.push_back({i, *d});
            }
        }
        std::swap(level, next);
    }
    result.stats.occurrences_matched = result.matches.size();
    return result;
}

// Brute-force predicate over the whole dataset; the reference every scheme
// is checked against.
template <typename Point, typename Query, typename Member>
auto linear_scan(const std::vector<Point>& data, const Query& q, Member&& member)
{
    using Dist = typename std::invoke_result_t<Member&, const Query&, const Point&>::value_type;
    SearchResult<Dist> result;
    result.stats.nodes_visited = 1;
    result.stats.blocks_opened = 1;
    for (std::size_t i = 0; i < data.size(); ++i) {
        ++result.stats.points_scanned;
        if (auto d = member(q, data[i]))
            result.matches.push_back({i, *d});
    }
    result.stats.occurrences_matched = result.matches.size();
    return result;
}

// T = {root, leaf}, one block holding the whole dataset, constant decision.
template <typename Query, typename Point>
IndexScheme<Point, Query> linear_scan_scheme(const Workload<Point>& w)
{
    using Scheme = IndexScheme<Point, Query>;
    typename Scheme::Node root, leaf;
    root.children = {1};
    root.decide = [](const Query&, std::vector<std::size_t>& out) { out.push_back(0); };
    leaf.parent = 0;
    leaf.block.resize(w.size());
    for (std::size_t i = 0; i < w.size(); ++i)
        leaf.block[i] = i;
    leaf.domain = [](const Point&) { return true; };
    return Scheme(w.points, {std::move(root), std::move(leaf)});
}

struct ConsistencyWitness {
    std::size_t probe;                   // index into the probe list
    std::size_t point;                   // dataset index that was lost
    std::optional<NodeId> pruning_node;  // node whose decision rejected the next step
    std::vector<NodeId> path;            // root-to-leaf path through which the point was sought
};

struct ConsistencyVerdict {
    bool consistent = true;
    std::optional<ConsistencyWitness> witness;
    explicit operator bool() const noexcept { return consistent; }
};

// Compares answer() against linear_scan() on every probe. On the first
// missing point, locates the decision that pruned it.
template <typename Point, typename Query, typename Member>
ConsistencyVerdict check_consistency(const IndexScheme<Point, Query>& scheme, const std::vector<Query>& probes,
                                     Member&& member)
{
    if (probes.empty())
        throw ArgumentError("check_consistency needs at least one probe");
    std::vector<std::size_t> admitted;
    for (std::size_t p = 0; p < probes.size(); ++p) {
        const auto got = answer(scheme, probes[p], member);
        const auto want = linear_scan(scheme.data(), probes[p], member);
        std::vector<bool> found(scheme.data().size(), false);
        for (const auto& m : got.matches)
            found[m.index] = true;
        for (const auto& m : want.matches) {
            if (found[m.index])
                continue;
            ConsistencyWitness w{p, m.index, std::nullopt, {}};
            for (NodeId leaf = 0; leaf < scheme.node_count() && !w.pruning_node; ++leaf) {
                const auto& node = scheme.node(leaf);
                if (!node.children.empty())
                    continue;
                bool holds = false;
                for (std::size_t i : node.block)
                    holds = holds || i == m.index;
                if (!holds)
                    continue;
                w.path = scheme.path_to(leaf);
                for (std::size_t s = 0; s + 1 < w.path.size(); ++s) {
                    const auto& parent = scheme.node(w.path[s]);
                    admitted.clear();
                    parent.decide(probes[p], admitted);
                    bool passes = false;
                    for (std::size_t pos : admitted)
                        passes = passes || (pos < parent.children.size() && parent.children[pos] == w.path[s + 1]);
                    if (!passes) {
                        w.pruning_node = w.path[s];
                        break;
                    }
                }
            }
            return {false, std::move(w)};
        }
    }
    return {};
}

// New root whose children are the roots of the summands; the root forwards
// every query to every branch. Dataset indices are re-based in order.
template <typename Point, typename Query>
IndexScheme<Point, Query> disjoint_sum(const std::vector<IndexScheme<Point, Query>>& schemes)
{
    using Scheme = IndexScheme<Point, Query>;
    if (schemes.empty())
        throw ArgumentError("disjoint_sum needs at least one scheme");
    auto data = std::make_shared<std::vector<Point>>();
    std::vector<typename Scheme::Node> nodes(1);
    const std::size_t branches = schemes.size();
    nodes[0].decide = [branches](const Query&, std::vector<std::size_t>& out) {
        for (std::size_t i = 0; i < branches; ++i)
            out.push_back(i);
    };
    for (const auto& s : schemes) {
        const std::size_t node_offset = nodes.size();
        const std::size_t data_offset = data->size();
        data->insert(data->end(), s.data().begin(), s.data().end());
        nodes[0].children.push_back(node_offset);
        for (const auto& n : s.nodes()) {
            auto copy = n;
            copy.parent = n.parent ? std::optional<NodeId>(*n.parent + node_offset) : std::optional<NodeId>(0);
            for (auto& c : copy.children)
                c += node_offset;
            for (auto& i : copy.block)
                i += data_offset;
            nodes.push_back(std::move(copy));
        }
    }
    return Scheme(std::move(data), std::move(nodes));
}

} // namespace qmidx

#endif // QMIDX_SCHEME_HPP
