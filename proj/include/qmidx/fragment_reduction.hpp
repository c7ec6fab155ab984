#ifndef QMIDX_FRAGMENT_REDUCTION_HPP
#define QMIDX_FRAGMENT_REDUCTION_HPP

#include <memory>
#include <string>

#include "qmidx/fragment.hpp"
#include "qmidx/reduce.hpp"

namespace qmidx {

using FragmentQuery = RangeQuery<std::string, int>;

// Query on the group-string domain: all codes c whose cylinder lies within
// left distance `radius` of `center`.
struct CylinderQuery {
    std::vector<std::uint8_t> center;  // symbol ordinals
    int radius = 0;
};

using FragmentReduction = ProjectiveReduction<std::string, FragmentQuery, std::uint64_t, CylinderQuery>;

// x -> bin code of x; B_eps(w) -> CylinderQuery{w, eps}. X2 is the list of
// nonempty codes in directory order, so X2 indices are directory positions.
FragmentReduction fragment_reduction(std::shared_ptr<const FragmentIndex> index);

// Enumerates the bins meeting a CylinderQuery (directory positions).
AccessMethod<CylinderQuery> bin_enumerator(std::shared_ptr<const FragmentIndex> index);

bool cylinder_contains(const FragmentIndex& index, const CylinderQuery& q, std::uint64_t code);

// Membership for left balls under the index's string quasi-metric.
inline auto fragment_membership(const SymbolQuasiMetric& qm)
{
    return [qm](const FragmentQuery& q, const std::string& x) -> std::optional<int> {
        const int d = string_qdist(q.center, x, qm);
        if (d <= q.radius)
            return d;
        return std::nullopt;
    };
}

// Prefix tree over group strings materialized on nonempty prefixes only.
// Leaves are the nonempty bins; each leaf block holds its directory position.
IndexScheme<std::uint64_t, CylinderQuery> prefix_tree_scheme(std::shared_ptr<const FragmentIndex> index);

} // namespace qmidx

#endif // QMIDX_FRAGMENT_REDUCTION_HPP
