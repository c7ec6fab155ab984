#include <cmath>
#include <numeric>
#include <random>
#include <set>

#include "doctest.h"
#include "oracles.hpp"
#include "qmidx/certification.hpp"
#include "qmidx/fragment_reduction.hpp"
#include "qmidx/reduce.hpp"
#include "support.hpp"

using namespace qmidx;

namespace {

using Query = RangeQuery<std::string, int>;
using Strings = std::vector<std::string>;

auto qm_member()
{
    return fragment_membership(fixture::blosum_qm());
}

auto metric_member()
{
    static const auto metric = associated_metric(fixture::blosum_qm(), MetricMode::max);
    return [](const Query& q, const std::string& x) -> std::optional<int> {
        const int d = string_dist(q.center, x, metric);
        return d <= q.radius ? std::optional<int>(d) : std::nullopt;
    };
}

template <typename R>
std::set<std::string> names(const R& answer, const Strings& xs)
{
    std::set<std::string> s;
    for (const auto& m : answer.matches)
        s.insert(xs[m.index]);
    return s;
}

std::vector<Query> probes(std::size_t n, std::uint64_t seed, std::size_t m = 10)
{
    std::mt19937_64 rng(seed);
    std::vector<Query> out;
    const int radii[] = {5, 10, 25, 40};
    for (std::size_t i = 0; i < n; ++i)
        out.push_back({oracle::random_fragment(rng, m), radii[i % 4]});
    return out;
}

ProjectiveReduction<std::string, Query, std::string, Query> identity(std::shared_ptr<const Strings> xs)
{
    return {xs, xs, [](const std::string& s) { return s; }, [](const Query& q) { return q; }};
}

// Prefix of length l, a 1-Lipschitz map for both the quasi-metric and the
// max metric because per-position distances are nonnegative.
ProjectiveReduction<std::string, Query, std::string, Query> prefix_map(std::shared_ptr<const Strings> xs,
                                                                        std::size_t l)
{
    auto targets = std::make_shared<Strings>();
    std::set<std::string> seen;
    for (const auto& x : *xs)
        if (seen.insert(x.substr(0, l)).second)
            targets->push_back(x.substr(0, l));
    return {xs, targets, [l](const std::string& s) { return s.substr(0, l); },
            [l](const Query& q) { return Query{q.center.substr(0, l), q.radius}; }};
}

} // namespace

TEST_CASE("projective reduction basics")
{
    auto xs = std::make_shared<const Strings>(oracle::uniform_corpus(300, 10, 31));
    const auto member = qm_member();

    SUBCASE("identity: same answers, overhead 1")
    {
        const auto red = identity(xs);
        const auto method = linear_scan_method<std::string, Query>(xs, member);
        for (const auto& q : probes(50, 32)) {
            const auto a = answer_by_projection(red, method, q, member);
            CHECK(names(a, *xs) == oracle::range(*xs, q.center, q.radius));
            const auto beta = access_overhead(red, method, q, member);
            if (!beta.empty_answer())
                CHECK(beta.beta == 1.0);
            else
                CHECK(std::isinf(beta.beta));
        }
    }

    SUBCASE("reduction to the trivial workload degenerates to a linear scan")
    {
        auto star = std::make_shared<const std::vector<int>>(std::vector<int>{0});
        ProjectiveReduction<std::string, Query, int, int> red(
            xs, star, [](const std::string&) { return 0; }, [](const Query&) { return 0; });
        const AccessMethod<int> everything = [](const int&) { return std::vector<std::size_t>{0}; };
        for (const auto& q : probes(20, 33)) {
            const auto a = answer_by_projection(red, everything, q, member);
            CHECK(a.candidates == xs->size());
            CHECK(names(a, *xs) == oracle::range(*xs, q.center, q.radius));
        }
    }

    SUBCASE("a point mapped outside X2 is rejected")
    {
        auto empty = std::make_shared<const Strings>(Strings{"AAAAAAAAAA"});
        using Red = ProjectiveReduction<std::string, Query, std::string, Query>;
        CHECK_THROWS_AS(Red(xs, empty, [](const std::string& s) { return s; }, [](const Query& q) { return q; }),
                        ReductionError);
    }

    SUBCASE("sampled validity check")
    {
        const auto good = prefix_map(xs, 5);
        const auto in2 = [](const Query& q, const std::string& y) { return string_qdist(q.center, y, fixture::blosum_qm()) <= q.radius; };
        const auto in1 = [](const Query& q, const std::string& x) { return oracle::qdist(q.center, x) <= q.radius; };
        CHECK_FALSE(good.find_violation(probes(50, 34), in1, in2));
        auto targets = std::make_shared<Strings>();
        for (const auto& x : *xs)
            targets->push_back(x.substr(0, 5));
        const ProjectiveReduction<std::string, Query, std::string, Query> shrunk(
            xs, targets, [](const std::string& s) { return s.substr(0, 5); },
            [](const Query& q) { return Query{q.center.substr(0, 5), q.radius - 1000}; });
        std::vector<Query> wide{{(*xs)[0], 40}};
        CHECK(shrunk.find_violation(wide, in1, in2) == std::size_t{0});
    }
}

TEST_CASE("fragment index as a projective reduction onto group strings")
{
    const auto xs = oracle::uniform_corpus(5000, 10, 35);
    auto index = std::make_shared<const FragmentIndex>(fixture::index_of(xs));
    const auto red = fragment_reduction(index);
    const auto method = bin_enumerator(index);
    const auto member = qm_member();
    const auto in1 = [](const Query& q, const std::string& x) { return oracle::qdist(q.center, x) <= q.radius; };
    const auto in2 = [&](const CylinderQuery& q, std::uint64_t code) { return cylinder_contains(*index, q, code); };
    const auto ps = probes(50, 36);
    CHECK_FALSE(red.find_violation(ps, in1, in2));
    for (const auto& q : ps) {
        const auto a = answer_by_projection(red, method, q, member);
        const auto direct = range_search(*index, q.center, q.radius);
        std::set<std::size_t> x1, x2;
        for (const auto& m : a.matches)
            x1.insert(m.index);
        for (const auto& m : direct.matches)
            x2.insert(m.index);
        CHECK(x1 == x2);
        CHECK(a.candidates == direct.stats.points_scanned);
        const auto beta = access_overhead(red, method, q, member);
        if (!beta.empty_answer())
            CHECK(beta.beta >= 1.0);
    }

    SUBCASE("induced scheme of the prefix tree over bins")
    {
        const auto scheme2 = prefix_tree_scheme(index);
        const auto scheme1 = induced_scheme(red, scheme2);
        CHECK(check_consistency(scheme1, ps, member));
        for (const auto& q : ps) {
            const auto a = answer(scheme1, q, member);
            CHECK(a.stats.points_scanned == range_search(*index, q.center, q.radius).stats.points_scanned);
        }
    }
}

TEST_CASE("majorant metric replacement")
{
    auto xs = std::make_shared<const Strings>(oracle::uniform_corpus(2000, 10, 37));
    const auto scale = majorant_scale(fixture::blosum_qm(), associated_metric(fixture::blosum_qm(), MetricMode::max));
    // The widest ratio is d(A,C)=9 against qm(A,C)=4.
    CHECK(scale.num == 9);
    CHECK(scale.den == 4);
    CHECK(scale.widen(10) == 22);
    const auto red = majorant_reduction<std::string, int>(xs, [scale](int eps) { return scale.widen(eps); });
    const auto method = linear_scan_method<std::string, Query>(xs, metric_member());
    const auto member = qm_member();
    for (const auto& q : probes(100, 38)) {
        const auto a = answer_by_projection(red, method, q, member);
        CHECK(names(a, *xs) == oracle::range(*xs, q.center, q.radius));
        const auto beta = access_overhead(red, method, q, member);
        if (!beta.empty_answer())
            CHECK(beta.beta >= 1.0);
        else
            CHECK(std::isinf(beta.beta));
    }

    SUBCASE("without widening the metric ball misses hits")
    {
        const auto bare = majorant_reduction<std::string, int>(xs, [](int eps) { return eps; });
        bool missed = false;
        for (const auto& q : probes(100, 38))
            missed = missed || names(answer_by_projection(bare, method, q, member), *xs) != oracle::range(*xs, q.center, q.radius);
        CHECK(missed);
    }
}

TEST_CASE("inductive reductions")
{
    auto xs = std::make_shared<const Strings>(oracle::uniform_corpus(200, 10, 39));
    const auto member = qm_member();

    SUBCASE("identity")
    {
        InductiveReduction<std::string, Query, std::string, Query> red(
            xs, xs, [](const std::string& s) { return s; }, [](const Query& q) { return q; });
        const auto method = linear_scan_method<std::string, Query>(xs, member);
        for (const auto& q : probes(30, 40))
            CHECK(names(answer_by_induction(red, method, q, member), *xs) == oracle::range(*xs, q.center, q.radius));
    }

    SUBCASE("non-injective surjection with preimage-closed queries")
    {
        // X2 = 0..2n-1, i(y) = X1[y mod n]; i_q(Q) = { y : i(y) in Q }.
        const std::size_t n = xs->size();
        auto ys = std::make_shared<std::vector<std::size_t>>(2 * n);
        std::iota(ys->begin(), ys->end(), std::size_t{0});
        InductiveReduction<std::string, Query, std::size_t, Query> red(
            xs, ys, [xs, n](const std::size_t& y) { return (*xs)[y % n]; }, [](const Query& q) { return q; });
        const AccessMethod<Query> method = [xs, n](const Query& q) {
            std::vector<std::size_t> out;
            for (std::size_t y = 0; y < 2 * n; ++y)
                if (oracle::qdist(q.center, (*xs)[y % n]) <= q.radius)
                    out.push_back(y);
            return out;
        };
        const auto in1 = [](const Query& q, const std::string& x) { return oracle::qdist(q.center, x) <= q.radius; };
        const auto in2 = [&](const Query& q, std::size_t y) { return oracle::qdist(q.center, (*xs)[y % n]) <= q.radius; };
        const auto ps = probes(50, 41);
        CHECK_FALSE(red.find_violation(ps, in1, in2));
        for (const auto& q : ps) {
            const auto a = answer_by_induction(red, method, q, member);
            CHECK(names(a, *xs) == oracle::range(*xs, q.center, q.radius));
            CHECK(a.matches.size() == names(a, *xs).size());
            CHECK(a.candidates == 2 * a.matches.size());
        }
    }

    SUBCASE("X1 must be covered")
    {
        auto few = std::make_shared<const Strings>(Strings{(*xs)[0]});
        using Red = InductiveReduction<std::string, Query, std::string, Query>;
        CHECK_THROWS_AS(Red(xs, few, [](const std::string& s) { return s; }, [](const Query& q) { return q; }),
                        ReductionError);
    }
}

TEST_CASE("induced schemes")
{
    auto xs = std::make_shared<const Strings>(oracle::uniform_corpus(400, 10, 42));
    const auto member = qm_member();

    SUBCASE("identity reduction keeps answers")
    {
        const auto red = identity(xs);
        const Workload<std::string> w{"strings", *xs};
        TreeOptions opts;
        opts.leaf_capacity = 12;
        const DistanceOracle<std::string, int> qm{
            [](const std::string& a, const std::string& b) { return string_qdist(a, b, fixture::blosum_qm()); }, false};
        const auto scheme2 = build_metric_tree(w, CertFamily::qm_mtree, qm, opts);
        const auto scheme1 = induced_scheme(red, scheme2);
        CHECK(scheme1.node_count() == scheme2.node_count());
        for (const auto& q : probes(30, 43))
            CHECK(names(answer(scheme1, q, member), *xs) == names(answer(scheme2, q, member), scheme2.data()));
    }

    SUBCASE("1-Lipschitz map between metric workloads")
    {
        const auto red = prefix_map(xs, 5);
        static const auto metric = associated_metric(fixture::blosum_qm(), MetricMode::max);
        const DistanceOracle<std::string, int> rho{
            [](const std::string& a, const std::string& b) { return string_dist(a, b, metric); }, true};
        const Workload<std::string> w2{"strings of length 5", red.target()};
        TreeOptions opts;
        opts.leaf_capacity = 8;
        const auto scheme2 = build_metric_tree(w2, CertFamily::mtree, rho, opts);
        const auto scheme1 = induced_scheme(red, scheme2);
        CHECK(check_consistency(scheme1, probes(50, 44), metric_member()));
    }
}

TEST_CASE("composition of projective reductions")
{
    auto xs = std::make_shared<const Strings>(oracle::uniform_corpus(300, 10, 45));
    const auto member = qm_member();
    const auto first = prefix_map(xs, 6);
    const auto second = prefix_map(std::make_shared<const Strings>(first.target()), 3);
    auto x3 = std::make_shared<const Strings>(second.target());
    const auto composite = compose(first, second, x3);
    const auto scan3 = linear_scan_method<std::string, Query>(x3, member);
    // Chained: answer in W2 through the second reduction, then pull back.
    const AccessMethod<Query> via_second = [&](const Query& q2) {
        std::vector<std::size_t> out;
        for (const auto& m : answer_by_projection(second, scan3, q2, member).matches)
            out.push_back(m.index);
        return out;
    };
    for (const auto& q : probes(50, 46)) {
        const auto chained = answer_by_projection(first, via_second, q, member);
        const auto direct = answer_by_projection(composite, scan3, q, member);
        CHECK(names(chained, *xs) == names(direct, *xs));
        CHECK(names(direct, *xs) == oracle::range(*xs, q.center, q.radius));
    }
}
