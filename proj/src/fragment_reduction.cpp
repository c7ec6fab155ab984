#include "qmidx/fragment_reduction.hpp"

namespace qmidx {

FragmentReduction fragment_reduction(std::shared_ptr<const FragmentIndex> index)
{
    auto x1 = std::make_shared<std::vector<std::string>>();
    x1->reserve(index->size());
    for (std::size_t i = 0; i < index->size(); ++i)
        x1->push_back(index->fragment(i));
    auto x2 = std::make_shared<std::vector<std::uint64_t>>();
    for (const auto& bin : index->directory())
        x2->push_back(bin.code);
    return FragmentReduction(
        std::move(x1), std::move(x2),
        [index](const std::string& x) { return index->code_of(index->encode_query(x)); },
        [index](const FragmentQuery& q) { return CylinderQuery{index->encode_query(q.center), q.radius}; });
}

AccessMethod<CylinderQuery> bin_enumerator(std::shared_ptr<const FragmentIndex> index)
{
    return [index](const CylinderQuery& q) { return enumerate_bins(*index, q.center, q.radius); };
}

bool cylinder_contains(const FragmentIndex& index, const CylinderQuery& q, std::uint64_t code)
{
    const auto digits = BinCode::decode(code, index.partition().size(), index.m()).digits;
    return cylinder_lb(q.center, digits, index.table()) <= q.radius;
}

IndexScheme<std::uint64_t, CylinderQuery> prefix_tree_scheme(std::shared_ptr<const FragmentIndex> index)
{
    using Scheme = IndexScheme<std::uint64_t, CylinderQuery>;
    const std::size_t m = index->m();
    const std::size_t groups = index->partition().size();
    const auto& dir = index->directory();

    auto codes = std::make_shared<std::vector<std::uint64_t>>();
    for (const auto& bin : dir)
        codes->push_back(bin.code);

    std::vector<Scheme::Node> nodes(1);
    // Per node: prefix digits, for the decision closures.
    std::vector<std::vector<std::uint8_t>> prefixes(1);
    struct Frame {
        NodeId node;
        std::size_t lo, hi;
    };
    std::vector<Frame> stack{{0, 0, dir.size()}};
    while (!stack.empty()) {
        const Frame f = stack.back();
        stack.pop_back();
        const std::size_t depth = prefixes[f.node].size();
        if (depth == m) {
            nodes[f.node].block = {f.lo};
            continue;
        }
        const std::uint64_t span = index->power(m - depth - 1);
        std::size_t lo = f.lo;
        std::vector<std::vector<std::uint8_t>> child_digits;
        while (lo < f.hi) {
            const std::uint64_t child = dir[lo].code / span;
            std::size_t hi = lo;
            while (hi < f.hi && dir[hi].code / span == child)
                ++hi;
            const NodeId c = nodes.size();
            nodes.emplace_back();
            nodes[c].parent = f.node;
            nodes[f.node].children.push_back(c);
            auto digits = prefixes[f.node];
            digits.push_back(static_cast<std::uint8_t>(child % groups));
            prefixes.push_back(digits);
            child_digits.push_back(std::move(digits));
            stack.push_back({c, lo, hi});
            lo = hi;
        }
        nodes[f.node].decide = [index, child_digits = std::move(child_digits)](const CylinderQuery& q,
                                                                               std::vector<std::size_t>& out) {
            for (std::size_t i = 0; i < child_digits.size(); ++i)
                if (cylinder_lb(q.center, child_digits[i], index->table()) <= q.radius)
                    out.push_back(i);
        };
    }
    return Scheme(std::move(codes), std::move(nodes));
}

} // namespace qmidx
