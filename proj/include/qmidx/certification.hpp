#ifndef QMIDX_CERTIFICATION_HPP
#define QMIDX_CERTIFICATION_HPP

#include <algorithm>
#include <cmath>
#include <numeric>
#include <random>
#include <string>
#include <variant>
#include <vector>

#include "qmidx/scheme.hpp"

namespace qmidx {

enum class CertFamily { gnat, vp, mtree, qm_mtree, cylinder, custom };

inline const char* to_string(CertFamily f)
{
    switch (f) {
    case CertFamily::gnat: return "gnat";
    case CertFamily::vp: return "vp";
    case CertFamily::mtree: return "mtree";
    case CertFamily::qm_mtree: return "qm_mtree";
    case CertFamily::cylinder: return "cylinder";
    case CertFamily::custom: return "custom";
    }
    return "?";
}

inline bool requires_metric(CertFamily f)
{
    return f == CertFamily::gnat || f == CertFamily::vp || f == CertFamily::mtree;
}

// Certification function f_t: a child is admitted when f_t(center) <= radius.
template <typename Point>
struct Certification {
    CertFamily family = CertFamily::custom;
    std::function<double(const Point&)> f;

    double operator()(const Point& w) const { return f(w); }
};

// f(w) = sign * (rho(w, anchor) - median), sign = +1 for the inner child.
template <typename Point>
struct GnatParams {
    Point anchor;
    double median;
    bool inner;
};

// f(w) = (rho(near, w) - rho(far, w)) / 2.
template <typename Point>
struct VpParams {
    Point near;
    Point far;
};

// f(w) = rho(anchor, w) - sup_{tau in B_t} rho(anchor, tau).
template <typename Point>
struct MTreeParams {
    Point anchor;
    double radius;
};

// f(w) = rho(w, anchor) - sup_{tau in B_t} rho(tau, anchor).
template <typename Point>
struct QmMTreeParams {
    Point anchor;
    double radius;
};

template <typename Point>
using CertParams = std::variant<GnatParams<Point>, VpParams<Point>, MTreeParams<Point>, QmMTreeParams<Point>>;

template <typename Point>
CertFamily family_of(const CertParams<Point>& p)
{
    static constexpr CertFamily families[] = {CertFamily::gnat, CertFamily::vp, CertFamily::mtree,
                                              CertFamily::qm_mtree};
    return families[p.index()];
}

template <typename Point, typename Dist>
Certification<Point> make_certification(const CertParams<Point>& params, const DistanceOracle<Point, Dist>& rho)
{
    const CertFamily family = family_of(params);
    if (requires_metric(family) && !rho.symmetric)
        throw ArgumentError(std::string(to_string(family)) + " certification requires a symmetric distance");
    return std::visit(
        [&](const auto& p) -> Certification<Point> {
            using P = std::decay_t<decltype(p)>;
            if constexpr (std::is_same_v<P, GnatParams<Point>>) {
                const double sign = p.inner ? 1.0 : -1.0;
                return {family, [=](const Point& w) { return sign * (double(rho(w, p.anchor)) - p.median); }};
            } else if constexpr (std::is_same_v<P, VpParams<Point>>) {
                return {family, [=](const Point& w) { return 0.5 * (double(rho(p.near, w)) - double(rho(p.far, w))); }};
            } else if constexpr (std::is_same_v<P, MTreeParams<Point>>) {
                return {family, [=](const Point& w) { return double(rho(p.anchor, w)) - p.radius; }};
            } else {
                return {family, [=](const Point& w) { return double(rho(w, p.anchor)) - p.radius; }};
            }
        },
        params);
}

template <typename Point>
Certification<Point> custom_certification(std::function<double(const Point&)> f,
                                          CertFamily family = CertFamily::custom)
{
    return {family, std::move(f)};
}

// Tree of blocks before decisions are attached. `members` holds B_t
// intersected with the dataset; every non-root node carries f_t.
template <typename Point>
struct BlockTree {
    struct Node {
        std::optional<NodeId> parent;
        std::vector<NodeId> children;
        std::vector<std::size_t> members;
        std::optional<Certification<Point>> cert;
    };
    std::vector<Node> nodes;
};

struct CertTreeOptions {
    std::size_t lipschitz_samples = 10000;
    std::uint64_t seed = 0x5eed;
};

// Assembles F_t(B_eps(w)) = { s in C_t : f_s(w) <= eps } after checking both
// covering conditions, f_s <= 0 on every dataset member of B_s, and the left
// 1-Lipschitz property f(x) - f(y) <= rho(x, y) on sampled pairs drawn from
// the dataset and, when supplied, from `domain_sample`.
template <typename Point, typename Dist>
IndexScheme<Point, RangeQuery<Point, Dist>> build_cert_tree(const Workload<Point>& w, const BlockTree<Point>& tree,
                                                             const DistanceOracle<Point, Dist>& rho,
                                                             const CertTreeOptions& opts = {},
                                                             const std::vector<Point>& domain_sample = {})
{
    using Query = RangeQuery<Point, Dist>;
    using Scheme = IndexScheme<Point, Query>;
    const auto& nodes = tree.nodes;
    if (nodes.empty() || nodes[0].parent)
        throw BuildError("block tree must start with its root");

    std::vector<bool> in_leaf(w.size(), false);
    for (NodeId t = 0; t < nodes.size(); ++t) {
        const auto& n = nodes[t];
        if (n.children.empty())
            for (std::size_t i : n.members) {
                if (i >= w.size())
                    throw BuildError("block " + std::to_string(t) + " references a point outside the dataset");
                in_leaf[i] = true;
            }
        if (t != 0) {
            if (!n.cert)
                throw BuildError("node " + std::to_string(t) + " has no certification function");
            for (std::size_t i : n.members)
                if ((*n.cert)(w[i]) > 0.0)
                    throw BuildError("certification of node " + std::to_string(t) + " is positive on member " +
                                     std::to_string(i));
        }
        if (t != 0 && !n.children.empty()) {
            std::vector<bool> mine(w.size(), false);
            for (std::size_t i : n.members)
                mine[i] = true;
            for (NodeId c : n.children)
                for (std::size_t i : nodes.at(c).members)
                    if (!mine[i])
                        throw BuildError("point " + std::to_string(i) + " of block " + std::to_string(c) +
                                         " escapes its parent block " + std::to_string(t));
        }
    }
    for (std::size_t i = 0; i < w.size(); ++i)
        if (!in_leaf[i])
            throw BuildError("covering violation: dataset point " + std::to_string(i) + " is in no leaf block");

    if (nodes.size() > 1 && opts.lipschitz_samples > 0) {
        std::vector<const Point*> pool;
        for (const auto& p : *w.points)
            pool.push_back(&p);
        for (const auto& p : domain_sample)
            pool.push_back(&p);
        if (!pool.empty()) {
            std::mt19937_64 rng(opts.seed);
            std::uniform_int_distribution<std::size_t> pick_node(1, nodes.size() - 1);
            std::uniform_int_distribution<std::size_t> pick_point(0, pool.size() - 1);
            for (std::size_t s = 0; s < opts.lipschitz_samples; ++s) {
                const NodeId t = pick_node(rng);
                const Point& x = *pool[pick_point(rng)];
                const Point& y = *pool[pick_point(rng)];
                const double lhs = (*nodes[t].cert)(x) - (*nodes[t].cert)(y);
                const double bound = double(rho(x, y));
                if (lhs > bound + 1e-9 * std::max(1.0, std::abs(bound)))
                    throw BuildError("certification of node " + std::to_string(t) +
                                     " is not left 1-Lipschitz on a sampled pair (f(x)-f(y)=" + std::to_string(lhs) +
                                     " > rho(x,y)=" + std::to_string(bound) + ")");
            }
        }
    }

    std::vector<typename Scheme::Node> out(nodes.size());
    for (NodeId t = 0; t < nodes.size(); ++t) {
        out[t].parent = nodes[t].parent;
        out[t].children = nodes[t].children;
        if (nodes[t].children.empty()) {
            out[t].block = nodes[t].members;
            if (t != 0) {
                auto cert = *nodes[t].cert;
                out[t].domain = [cert](const Point& p) { return cert(p) <= 0.0; };
            }
            continue;
        }
        std::vector<Certification<Point>> certs;
        for (NodeId c : nodes[t].children)
            certs.push_back(*nodes[c].cert);
        out[t].decide = [certs = std::move(certs)](const Query& q, std::vector<std::size_t>& admitted) {
            for (std::size_t i = 0; i < certs.size(); ++i)
                if (certs[i](q.center) <= double(q.radius))
                    admitted.push_back(i);
        };
    }
    return Scheme(w.points, std::move(out));
}

struct TreeOptions {
    std::size_t leaf_capacity = 32;
    std::uint64_t seed = 0x7ee;
    CertTreeOptions cert;
};

// Binary block tree split by anchor distances, certified with one of the
// gnat, vp, mtree or qm_mtree families. Nodes holding at most
// `leaf_capacity` points, or that cannot be split, become leaves.
template <typename Point, typename Dist>
BlockTree<Point> build_block_tree(const Workload<Point>& w, CertFamily family, const DistanceOracle<Point, Dist>& rho,
                                  const TreeOptions& opts = {})
{
    if (family == CertFamily::cylinder || family == CertFamily::custom)
        throw ArgumentError(std::string("no generic builder for the ") + to_string(family) + " family");
    if (requires_metric(family) && !rho.symmetric)
        throw ArgumentError(std::string(to_string(family)) + " certification requires a symmetric distance");

    BlockTree<Point> tree;
    std::mt19937_64 rng(opts.seed);
    auto random_member = [&](const std::vector<std::size_t>& m) {
        return m[std::uniform_int_distribution<std::size_t>(0, m.size() - 1)(rng)];
    };
    // Covering radius of a block around its anchor, in the direction the
    // family's certification uses.
    auto covering_radius = [&](const std::vector<std::size_t>& members, std::size_t anchor) {
        double r = 0;
        for (std::size_t i : members)
            r = std::max(r, family == CertFamily::qm_mtree ? double(rho(w[i], w[anchor])) : double(rho(w[anchor], w[i])));
        return r;
    };
    auto ball_params = [&](const std::vector<std::size_t>& members, std::size_t anchor) -> CertParams<Point> {
        const double r = covering_radius(members, anchor);
        if (family == CertFamily::qm_mtree)
            return QmMTreeParams<Point>{w[anchor], r};
        return MTreeParams<Point>{w[anchor], r};
    };

    tree.nodes.emplace_back();
    tree.nodes[0].members.resize(w.size());
    std::iota(tree.nodes[0].members.begin(), tree.nodes[0].members.end(), std::size_t{0});

    std::vector<NodeId> pending{0};
    while (!pending.empty()) {
        const NodeId t = pending.back();
        pending.pop_back();
        const auto members = tree.nodes[t].members;
        if (members.size() <= std::max<std::size_t>(opts.leaf_capacity, 1))
            continue;

        std::vector<std::size_t> left, right;
        CertParams<Point> left_params, right_params;
        if (family == CertFamily::vp) {
            const std::size_t a = random_member(members);
            std::size_t b = a;
            for (int attempt = 0; attempt < 8 && (b == a || rho(w[a], w[b]) == Dist{}); ++attempt)
                b = random_member(members);
            if (b == a || rho(w[a], w[b]) == Dist{})
                continue;
            for (std::size_t i : members)
                (rho(w[a], w[i]) <= rho(w[b], w[i]) ? left : right).push_back(i);
            left_params = VpParams<Point>{w[a], w[b]};
            right_params = VpParams<Point>{w[b], w[a]};
        } else {
            const std::size_t a = random_member(members);
            std::vector<std::pair<double, std::size_t>> keyed;
            for (std::size_t i : members)
                keyed.emplace_back(family == CertFamily::qm_mtree ? double(rho(w[i], w[a])) : double(rho(w[a], w[i])), i);
            std::sort(keyed.begin(), keyed.end());
            const std::size_t half = (keyed.size() + 1) / 2;
            if (keyed.front().first == keyed.back().first)
                continue;
            for (std::size_t j = 0; j < keyed.size(); ++j)
                (j < half ? left : right).push_back(keyed[j].second);
            if (family == CertFamily::gnat) {
                const double median = keyed[half - 1].first;
                left_params = GnatParams<Point>{w[a], median, true};
                right_params = GnatParams<Point>{w[a], median, false};
            } else {
                left_params = ball_params(left, a);
                right_params = ball_params(right, random_member(right));
            }
        }
        if (left.empty() || right.empty())
            continue;

        for (auto* side : {&left, &right}) {
            const NodeId c = tree.nodes.size();
            typename BlockTree<Point>::Node child;
            child.parent = t;
            std::sort(side->begin(), side->end());
            child.members = std::move(*side);
            child.cert = make_certification(side == &left ? left_params : right_params, rho);
            tree.nodes.push_back(std::move(child));
            tree.nodes[t].children.push_back(c);
            pending.push_back(c);
        }
    }
    return tree;
}

template <typename Point, typename Dist>
IndexScheme<Point, RangeQuery<Point, Dist>> build_metric_tree(const Workload<Point>& w, CertFamily family,
                                                               const DistanceOracle<Point, Dist>& rho,
                                                               const TreeOptions& opts = {},
                                                               const std::vector<Point>& domain_sample = {})
{
    return build_cert_tree(w, build_block_tree(w, family, rho, opts), rho, opts.cert, domain_sample);
}

} // namespace qmidx

#endif // QMIDX_CERTIFICATION_HPP
