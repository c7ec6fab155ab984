#ifndef QMIDX_REDUCE_HPP
#define QMIDX_REDUCE_HPP

#include <functional>
#include <limits>
#include <map>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "qmidx/scheme.hpp"

namespace qmidx {

class ReductionError : public Error {
public:
    using Error::Error;
};

// An access method answers a query by listing dataset indices.
template <typename Query>
using AccessMethod = std::function<std::vector<std::size_t>(const Query&)>;

// Projective reduction W1 -> W2: point map r : Omega1 -> Omega2 and query map
// r_q : Q1 -> Q2 with r(X1) in X2 and r(Q) in r_q(Q). The inverse image r^-1
// is materialized over the datasets only.
template <typename P1, typename Q1, typename P2, typename Q2>
class ProjectiveReduction {
public:
    using PointMap = std::function<P2(const P1&)>;
    using QueryMap = std::function<Q2(const Q1&)>;

    // Throws ReductionError if some r(x), x in X1, is not in X2.
    ProjectiveReduction(std::shared_ptr<const std::vector<P1>> x1, std::shared_ptr<const std::vector<P2>> x2,
                        PointMap r, QueryMap rq)
        : x1_(std::move(x1)), x2_(std::move(x2)), r_(std::move(r)), rq_(std::move(rq)), image_(x1_->size()),
          preimage_(x2_->size())
    {
        std::map<P2, std::size_t> where;
        for (std::size_t j = 0; j < x2_->size(); ++j)
            where.emplace((*x2_)[j], j);
        for (std::size_t i = 0; i < x1_->size(); ++i) {
            auto it = where.find(r_((*x1_)[i]));
            if (it == where.end())
                throw ReductionError("point " + std::to_string(i) + " of X1 maps outside X2");
            image_[i] = it->second;
            preimage_[it->second].push_back(i);
        }
    }

    const std::vector<P1>& source() const noexcept { return *x1_; }
    const std::vector<P2>& target() const noexcept { return *x2_; }
    const std::shared_ptr<const std::vector<P1>>& shared_source() const noexcept { return x1_; }
    P2 map_point(const P1& p) const { return r_(p); }
    Q2 map_query(const Q1& q) const { return rq_(q); }
    std::size_t image(std::size_t i) const { return image_.at(i); }
    const std::vector<std::size_t>& preimage(std::size_t j) const { return preimage_.at(j); }

    // Sampled check of r(Q) in r_q(Q): every x in Q among the dataset and
    // `extra` points must map into the mapped query. Returns the index of the
    // first failing probe, or nullopt.
    template <typename Member1, typename Member2>
    std::optional<std::size_t> find_violation(const std::vector<Q1>& probes, Member1&& in1, Member2&& in2,
                                              const std::vector<P1>& extra = {}) const
    {
        for (std::size_t p = 0; p < probes.size(); ++p) {
            const Q2 mapped = rq_(probes[p]);
            auto fails = [&](const P1& x) { return in1(probes[p], x) && !in2(mapped, r_(x)); };
            for (const auto& x : *x1_)
                if (fails(x))
                    return p;
            for (const auto& x : extra)
                if (fails(x))
                    return p;
        }
        return std::nullopt;
    }

private:
    std::shared_ptr<const std::vector<P1>> x1_;
    std::shared_ptr<const std::vector<P2>> x2_;
    PointMap r_;
    QueryMap rq_;
    std::vector<std::size_t> image_;
    std::vector<std::vector<std::size_t>> preimage_;
};

// Inductive reduction: i : Omega2 -> Omega1 and i_q : Q1 -> Q2 with
// i(X2) covering X1 and i^-1(Q) in i_q(Q).
template <typename P1, typename Q1, typename P2, typename Q2>
class InductiveReduction {
public:
    using PointMap = std::function<P1(const P2&)>;
    using QueryMap = std::function<Q2(const Q1&)>;

    // Throws ReductionError if some point of X1 has no preimage in X2.
    InductiveReduction(std::shared_ptr<const std::vector<P1>> x1, std::shared_ptr<const std::vector<P2>> x2,
                       PointMap i, QueryMap iq)
        : x1_(std::move(x1)), x2_(std::move(x2)), i_(std::move(i)), iq_(std::move(iq)), lift_(x2_->size())
    {
        std::map<P1, std::size_t> where;
        for (std::size_t j = 0; j < x1_->size(); ++j)
            where.emplace((*x1_)[j], j);
        std::vector<bool> hit(x1_->size(), false);
        for (std::size_t y = 0; y < x2_->size(); ++y) {
            auto it = where.find(i_((*x2_)[y]));
            if (it != where.end()) {
                lift_[y] = it->second;
                hit[it->second] = true;
            }
        }
        for (std::size_t j = 0; j < hit.size(); ++j)
            if (!hit[j])
                throw ReductionError("point " + std::to_string(j) + " of X1 is not the image of any point of X2");
    }

    const std::vector<P1>& source() const noexcept { return *x1_; }
    const std::vector<P2>& target() const noexcept { return *x2_; }
    Q2 map_query(const Q1& q) const { return iq_(q); }
    P1 map_point(const P2& y) const { return i_(y); }
    // Index in X1 of i(y), when it lies in X1.
    std::optional<std::size_t> lift(std::size_t y) const { return lift_.at(y); }

    // Sampled check of i^-1(Q) in i_q(Q) over X2 and `extra` points of Omega2.
    template <typename Member1, typename Member2>
    std::optional<std::size_t> find_violation(const std::vector<Q1>& probes, Member1&& in1, Member2&& in2,
                                              const std::vector<P2>& extra = {}) const
    {
        for (std::size_t p = 0; p < probes.size(); ++p) {
            const Q2 mapped = iq_(probes[p]);
            auto fails = [&](const P2& y) { return in1(probes[p], i_(y)) && !in2(mapped, y); };
            for (const auto& y : *x2_)
                if (fails(y))
                    return p;
            for (const auto& y : extra)
                if (fails(y))
                    return p;
        }
        return std::nullopt;
    }

private:
    std::shared_ptr<const std::vector<P1>> x1_;
    std::shared_ptr<const std::vector<P2>> x2_;
    PointMap i_;
    QueryMap iq_;
    std::vector<std::optional<std::size_t>> lift_;
};

template <typename Dist>
struct ReductionAnswer {
    std::vector<Match<Dist>> matches;  // indices into X1, in candidate order
    std::uint64_t candidates = 0;      // |r^-1(r_q(Q)) intersected with X1|
};

// Answer r_q(Q) in W2, then test every preimage of every returned point.
template <typename P1, typename Q1, typename P2, typename Q2, typename Member1>
auto answer_by_projection(const ProjectiveReduction<P1, Q1, P2, Q2>& red, const AccessMethod<Q2>& method2,
                          const Q1& q, Member1&& in1)
{
    using Dist = typename std::invoke_result_t<Member1&, const Q1&, const P1&>::value_type;
    ReductionAnswer<Dist> out;
    for (std::size_t y : method2(red.map_query(q))) {
        for (std::size_t x : red.preimage(y)) {
            ++out.candidates;
            if (auto d = in1(q, red.source()[x]))
                out.matches.push_back({x, *d});
        }
    }
    return out;
}

// Answer i_q(Q) in W2; keep i(y) when it is a dataset point inside Q.
// Several y with the same image are reported once.
template <typename P1, typename Q1, typename P2, typename Q2, typename Member1>
auto answer_by_induction(const InductiveReduction<P1, Q1, P2, Q2>& red, const AccessMethod<Q2>& method2, const Q1& q,
                         Member1&& in1)
{
    using Dist = typename std::invoke_result_t<Member1&, const Q1&, const P1&>::value_type;
    ReductionAnswer<Dist> out;
    std::vector<bool> seen(red.source().size(), false);
    for (std::size_t y : method2(red.map_query(q))) {
        ++out.candidates;
        const auto x = red.lift(y);
        if (!x || seen[*x])
            continue;
        seen[*x] = true;
        if (auto d = in1(q, red.source()[*x]))
            out.matches.push_back({*x, *d});
    }
    return out;
}

struct AccessOverhead {
    std::uint64_t candidates = 0;
    std::uint64_t answers = 0;
    // candidates / answers; +infinity when the answer is empty.
    double beta = 0;

    bool empty_answer() const noexcept { return answers == 0; }
};

inline AccessOverhead make_overhead(std::uint64_t candidates, std::uint64_t answers)
{
    return {candidates, answers,
            answers == 0 ? std::numeric_limits<double>::infinity() : double(candidates) / double(answers)};
}

template <typename P1, typename Q1, typename P2, typename Q2, typename Member1>
AccessOverhead access_overhead(const ProjectiveReduction<P1, Q1, P2, Q2>& red, const AccessMethod<Q2>& method2,
                               const Q1& q, Member1&& in1)
{
    const auto a = answer_by_projection(red, method2, q, in1);
    return make_overhead(a.candidates, a.matches.size());
}

// r*(I2): same tree, leaf blocks pulled back through r^-1, decisions
// evaluated on the mapped query.
template <typename P1, typename Q1, typename P2, typename Q2>
IndexScheme<P1, Q1> induced_scheme(const ProjectiveReduction<P1, Q1, P2, Q2>& red, const IndexScheme<P2, Q2>& scheme2)
{
    if (scheme2.data().size() != red.target().size())
        throw ReductionError("scheme dataset does not match the reduction target");
    const auto shared = std::make_shared<const ProjectiveReduction<P1, Q1, P2, Q2>>(red);
    std::vector<typename IndexScheme<P1, Q1>::Node> nodes(scheme2.node_count());
    for (NodeId t = 0; t < scheme2.node_count(); ++t) {
        const auto& src = scheme2.node(t);
        auto& dst = nodes[t];
        dst.parent = src.parent;
        dst.children = src.children;
        for (std::size_t y : src.block)
            for (std::size_t x : red.preimage(y))
                dst.block.push_back(x);
        if (src.domain) {
            auto pred = src.domain;
            dst.domain = [pred, shared](const P1& p) { return pred(shared->map_point(p)); };
        }
        if (src.decide) {
            dst.decide = [decide = src.decide, shared](const Q1& q, std::vector<std::size_t>& out) {
                decide(shared->map_query(q), out);
            };
        }
    }
    return IndexScheme<P1, Q1>(red.shared_source(), std::move(nodes));
}

// Access method that tests every dataset point.
template <typename Point, typename Query, typename Member>
AccessMethod<Query> linear_scan_method(std::shared_ptr<const std::vector<Point>> data, Member member)
{
    return [data = std::move(data), member = std::move(member)](const Query& q) {
        std::vector<std::size_t> out;
        for (std::size_t i = 0; i < data->size(); ++i)
            if (member(q, (*data)[i]))
                out.push_back(i);
        return out;
    };
}

// Replacing a quasi-metric rho by a metric d >= rho: identity on points,
// B_eps(w) under rho goes to B_widen(eps)(w) under d. Valid whenever
// rho(w, x) <= eps implies d(w, x) <= widen(eps), e.g. widen(eps) = c * eps
// with d <= c * rho.
template <typename Point, typename Dist>
ProjectiveReduction<Point, RangeQuery<Point, Dist>, Point, RangeQuery<Point, Dist>>
majorant_reduction(std::shared_ptr<const std::vector<Point>> data, std::function<Dist(Dist)> widen)
{
    return {data, data, [](const Point& p) { return p; },
            [widen = std::move(widen)](const RangeQuery<Point, Dist>& q) {
                return RangeQuery<Point, Dist>{q.center, widen(q.radius)};
            }};
}

// Chains W1 -> W2 -> W3 into a single reduction W1 -> W3.
template <typename P1, typename Q1, typename P2, typename Q2, typename P3, typename Q3>
ProjectiveReduction<P1, Q1, P3, Q3> compose(const ProjectiveReduction<P1, Q1, P2, Q2>& first,
                                            const ProjectiveReduction<P2, Q2, P3, Q3>& second,
                                            std::shared_ptr<const std::vector<P3>> x3)
{
    return ProjectiveReduction<P1, Q1, P3, Q3>(
        first.shared_source(), std::move(x3), [first, second](const P1& p) { return second.map_point(first.map_point(p)); },
        [first, second](const Q1& q) { return second.map_query(first.map_query(q)); });
}

} // namespace qmidx

#endif // QMIDX_REDUCE_HPP
