#include "qmidx/fragment.hpp"

#include <algorithm>
#include <fstream>
#include <istream>
#include <limits>
#include <numeric>
#include <queue>
#include <tuple>

namespace qmidx {

Partition::Partition(const Alphabet& alphabet, std::vector<std::string> groups)
    : alphabet_(alphabet), groups_(std::move(groups)), group_of_ordinal_(alphabet.size(), 0xff)
{
    if (groups_.size() < 2)
        throw ArgumentError("a partition needs at least two groups");
    if (groups_.size() > 255)
        throw ArgumentError("too many groups");
    for (std::size_t g = 0; g < groups_.size(); ++g) {
        if (groups_[g].empty())
            throw ArgumentError("partition group " + std::to_string(g) + " is empty");
        for (char c : groups_[g]) {
            const auto o = alphabet_.find(c);
            if (!o)
                throw ArgumentError(std::string("partition symbol '") + c + "' is not in the alphabet");
            if (group_of_ordinal_[*o] != 0xff)
                throw ArgumentError(std::string("symbol '") + c + "' appears in two partition groups");
            group_of_ordinal_[*o] = static_cast<std::uint8_t>(g);
        }
    }
    for (std::size_t o = 0; o < alphabet_.size(); ++o)
        if (group_of_ordinal_[o] == 0xff)
            throw ArgumentError(std::string("symbol '") + alphabet_.symbol(o) + "' is not covered by the partition");
}

Partition Partition::parse(std::istream& in, const Alphabet& alphabet)
{
    std::vector<std::string> groups;
    std::string line;
    std::size_t lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        const auto first = line.find_first_not_of(" \t\r");
        if (first == std::string::npos || line[first] == '#')
            continue;
        const auto last = line.find_last_not_of(" \t\r");
        std::string group = line.substr(first, last - first + 1);
        if (group.find_first_of(" \t") != std::string::npos)
            throw ParseError(lineno, "group symbols must be concatenated without spaces");
        groups.push_back(std::move(group));
    }
    try {
        return Partition(alphabet, std::move(groups));
    } catch (const ArgumentError& e) {
        throw ParseError(lineno, e.what());
    }
}

Partition Partition::load(const std::filesystem::path& path, const Alphabet& alphabet)
{
    std::ifstream in(path);
    if (!in)
        throw ArgumentError("cannot open partition file " + path.string());
    return parse(in, alphabet);
}

std::vector<std::string> default_groups() { return {"TSAN", "IVLM", "KRDEQ", "WFYH", "GPC"}; }

Partition default_partition(const Alphabet& alphabet) { return Partition(alphabet, default_groups()); }

Partition default_partition() { return default_partition(Alphabet(kAminoAcids)); }

GroupDistTable group_dist_table(const SymbolQuasiMetric& qm, const Partition& p)
{
    if (!(qm.alphabet() == p.alphabet()))
        throw ArgumentError("partition and quasi-metric use different alphabets");
    const auto n = static_cast<Eigen::Index>(qm.alphabet().size());
    GroupDistTable tbl{IntTable::Constant(n, static_cast<Eigen::Index>(p.size()), std::numeric_limits<int>::max()),
                       std::vector<std::uint8_t>(std::size_t(n))};
    for (Eigen::Index b = 0; b < n; ++b) {
        const auto g = static_cast<Eigen::Index>(p.group_of_ordinal(std::size_t(b)));
        tbl.group_of[std::size_t(b)] = static_cast<std::uint8_t>(g);
        tbl.left.col(g) = tbl.left.col(g).cwiseMin(qm.table().col(b));
    }
    return tbl;
}

std::uint64_t BinCode::encode(std::size_t base) const
{
    std::uint64_t v = 0;
    for (auto d : digits)
        v = v * base + d;
    return v;
}

BinCode BinCode::decode(std::uint64_t value, std::size_t base, std::size_t m)
{
    BinCode c{std::vector<std::uint8_t>(m)};
    for (std::size_t i = m; i-- > 0;) {
        c.digits[i] = static_cast<std::uint8_t>(value % base);
        value /= base;
    }
    return c;
}

BinCode bin_code(std::string_view fragment, const Partition& p)
{
    BinCode c;
    c.digits.reserve(fragment.size());
    for (char ch : fragment)
        c.digits.push_back(static_cast<std::uint8_t>(p.group_of(ch)));
    return c;
}

int cylinder_lb(std::span<const std::uint8_t> query, std::span<const std::uint8_t> prefix,
                const GroupDistTable& tbl) noexcept
{
    int sum = 0;
    for (std::size_t i = 0; i < prefix.size(); ++i)
        sum += tbl(query[i], prefix[i]);
    return sum;
}

int cylinder_lb(std::string_view query, const BinCode& prefix, const GroupDistTable& tbl, const Alphabet& alphabet)
{
    if (prefix.digits.size() > query.size())
        throw ArgumentError("prefix longer than the query");
    for (auto d : prefix.digits)
        if (d >= tbl.groups())
            throw ArgumentError("prefix digit out of range");
    const auto q = alphabet.encode(query);
    return cylinder_lb(q, prefix.digits, tbl);
}

namespace {

std::vector<std::uint64_t> powers_of(std::size_t base, std::size_t m)
{
    std::vector<std::uint64_t> p{1};
    for (std::size_t j = 0; j < m; ++j) {
        if (p.back() > std::numeric_limits<std::uint64_t>::max() / base / 2)
            throw ArgumentError("groups^m does not fit a 63-bit bin code");
        p.push_back(p.back() * base);
    }
    return p;
}

// Lexicographic comparison by symbol characters rather than ordinals.
struct LexLess {
    const Alphabet* alphabet;
    bool operator()(std::span<const std::uint8_t> a, std::span<const std::uint8_t> b) const
    {
        return std::lexicographical_compare(a.begin(), a.end(), b.begin(), b.end(), [this](auto x, auto y) {
            return static_cast<unsigned char>(alphabet->symbol(x)) < static_cast<unsigned char>(alphabet->symbol(y));
        });
    }
};

} // namespace

FragmentIndex::FragmentIndex(std::size_t m, Partition partition, SymbolQuasiMetric qm)
    : m_(m), partition_(std::move(partition)), qm_(std::move(qm)), table_(group_dist_table(qm_, partition_)),
      powers_(powers_of(partition_.size(), m))
{
    if (m == 0)
        throw ArgumentError("fragment length must be positive");
}

namespace {

std::size_t common_length(std::span<const FragmentCount> f)
{
    if (f.empty())
        throw ArgumentError("no fragments");
    return f.front().fragment.size();
}

std::size_t common_length(std::span<const std::string> f)
{
    if (f.empty())
        throw ArgumentError("no fragments");
    return f.front().size();
}

} // namespace

FragmentIndex::FragmentIndex(std::span<const FragmentCount> fragments, Partition partition, SymbolQuasiMetric qm)
    : FragmentIndex(common_length(fragments), std::move(partition), std::move(qm))
{
    std::vector<std::pair<std::vector<std::uint8_t>, std::uint64_t>> items;
    items.reserve(fragments.size());
    for (const auto& f : fragments) {
        if (f.fragment.size() != m_)
            throw ArgumentError("mixed fragment lengths: " + std::to_string(m_) + " and " +
                                std::to_string(f.fragment.size()));
        if (f.count == 0)
            throw ArgumentError("fragment '" + f.fragment + "' has zero occurrences");
        items.emplace_back(alphabet().encode(f.fragment), f.count);
    }
    build(std::move(items));
}

FragmentIndex::FragmentIndex(std::span<const std::string> fragments, Partition partition, SymbolQuasiMetric qm)
    : FragmentIndex(common_length(fragments), std::move(partition), std::move(qm))
{
    std::vector<std::pair<std::vector<std::uint8_t>, std::uint64_t>> items;
    items.reserve(fragments.size());
    for (const auto& f : fragments) {
        if (f.size() != m_)
            throw ArgumentError("mixed fragment lengths: " + std::to_string(m_) + " and " + std::to_string(f.size()));
        items.emplace_back(alphabet().encode(f), 1);
    }
    build(std::move(items));
}

std::uint64_t FragmentIndex::code_of(std::span<const std::uint8_t> ordinals) const noexcept
{
    std::uint64_t v = 0;
    for (auto o : ordinals)
        v = v * partition_.size() + table_.group_of[o];
    return v;
}

void FragmentIndex::build(std::vector<std::pair<std::vector<std::uint8_t>, std::uint64_t>> items)
{
    std::vector<std::uint64_t> codes(items.size());
    for (std::size_t i = 0; i < items.size(); ++i)
        codes[i] = code_of(items[i].first);
    std::vector<std::size_t> order(items.size());
    std::iota(order.begin(), order.end(), std::size_t{0});
    const LexLess lex{&alphabet()};
    std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
        if (codes[a] != codes[b])
            return codes[a] < codes[b];
        return lex(items[a].first, items[b].first);
    });

    symbols_.clear();
    counts_.clear();
    directory_.clear();
    for (std::size_t pos = 0; pos < order.size(); ++pos) {
        const auto& [ords, count] = items[order[pos]];
        const std::uint64_t code = codes[order[pos]];
        if (!counts_.empty() && pos > 0 && codes[order[pos - 1]] == code && items[order[pos - 1]].first == ords) {
            counts_.back() += count;
            continue;
        }
        if (directory_.empty() || directory_.back().code != code)
            directory_.push_back({code, counts_.size(), counts_.size()});
        symbols_.insert(symbols_.end(), ords.begin(), ords.end());
        counts_.push_back(count);
        directory_.back().end = counts_.size();
    }
}

FragmentIndex FragmentIndex::from_parts(std::size_t m, Partition partition, SymbolQuasiMetric qm,
                                        std::vector<std::uint8_t> symbols, std::vector<Bin> directory,
                                        std::vector<std::uint64_t> counts)
{
    FragmentIndex idx(m, std::move(partition), std::move(qm));
    idx.symbols_ = std::move(symbols);
    idx.directory_ = std::move(directory);
    idx.counts_ = std::move(counts);
    idx.validate();
    return idx;
}

void FragmentIndex::validate() const
{
    const std::size_t n = counts_.size();
    if (n == 0)
        throw ArgumentError("no fragments");
    if (symbols_.size() != n * m_)
        throw ArgumentError("fragment array size does not match the count table");
    for (auto o : symbols_)
        if (o >= alphabet().size())
            throw ArgumentError("fragment symbol ordinal out of range");
    for (auto c : counts_)
        if (c == 0)
            throw ArgumentError("fragment with zero occurrences");
    const LexLess lex{&alphabet()};
    std::uint64_t expect_begin = 0;
    for (std::size_t b = 0; b < directory_.size(); ++b) {
        const auto& bin = directory_[b];
        if (bin.begin != expect_begin || bin.end <= bin.begin || bin.end > n)
            throw ArgumentError("bin directory is not a contiguous cover of the fragments");
        if (b > 0 && directory_[b - 1].code >= bin.code)
            throw ArgumentError("bin directory is not sorted by code");
        if (bin.code >= bin_count())
            throw ArgumentError("bin code out of range");
        for (std::uint64_t i = bin.begin; i < bin.end; ++i) {
            if (code_of(ordinals(i)) != bin.code)
                throw ArgumentError("fragment " + std::to_string(i) + " is filed under the wrong bin");
            if (i > bin.begin && !lex(ordinals(i - 1), ordinals(i)))
                throw ArgumentError("fragments within bin are not strictly sorted");
        }
        expect_begin = bin.end;
    }
    if (expect_begin != n)
        throw ArgumentError("bin directory does not cover every fragment");
}

std::uint64_t FragmentIndex::total_occurrences() const noexcept
{
    return std::accumulate(counts_.begin(), counts_.end(), std::uint64_t{0});
}

std::vector<std::uint8_t> FragmentIndex::encode_query(std::string_view w) const
{
    if (w.size() != m_)
        throw ArgumentError("query length " + std::to_string(w.size()) + " differs from fragment length " +
                            std::to_string(m_));
    return alphabet().encode(w);
}

namespace {

// Directory positions in [lo, hi) whose codes fall in [first, last).
std::pair<std::size_t, std::size_t> directory_range(const std::vector<FragmentIndex::Bin>& dir, std::size_t lo,
                                                    std::size_t hi, std::uint64_t first, std::uint64_t last)
{
    auto by_code = [](const FragmentIndex::Bin& b, std::uint64_t c) { return b.code < c; };
    const auto a = std::lower_bound(dir.begin() + lo, dir.begin() + hi, first, by_code);
    const auto b = std::lower_bound(a, dir.begin() + hi, last, by_code);
    return {std::size_t(a - dir.begin()), std::size_t(b - dir.begin())};
}

} // namespace

std::vector<std::size_t> enumerate_bins(const FragmentIndex& index, std::span<const std::uint8_t> w, int eps,
                                        SearchStats* stats)
{
    if (eps < 0)
        throw ArgumentError("radius must be nonnegative");
    if (w.size() != index.m())
        throw ArgumentError("query length differs from fragment length");
    const auto& dir = index.directory();
    const auto& tbl = index.table();
    const std::size_t m = index.m();
    const std::size_t groups = index.partition().size();
    std::vector<std::size_t> out;
    SearchStats local;

    auto visit = [&](auto&& self, std::size_t depth, std::uint64_t prefix, int lb, std::size_t lo,
                     std::size_t hi) -> void {
        ++local.nodes_visited;
        if (depth == m) {
            out.push_back(lo);
            return;
        }
        const std::uint64_t span = index.power(m - depth - 1);
        for (std::size_t g = 0; g < groups; ++g) {
            const std::uint64_t child = prefix * groups + g;
            const auto [clo, chi] = directory_range(dir, lo, hi, child * span, (child + 1) * span);
            if (clo == chi)
                continue;
            ++local.decisions_evaluated;
            const int clb = lb + tbl(w[depth], g);
            if (clb <= eps)
                self(self, depth + 1, child, clb, clo, chi);
        }
    };
    visit(visit, 0, 0, 0, 0, dir.size());
    if (stats) {
        stats->nodes_visited += local.nodes_visited;
        stats->decisions_evaluated += local.decisions_evaluated;
    }
    return out;
}

std::vector<std::size_t> enumerate_bins(const FragmentIndex& index, std::string_view w, int eps, SearchStats* stats)
{
    return enumerate_bins(index, index.encode_query(w), eps, stats);
}

SearchResult<int> range_search(const FragmentIndex& index, std::string_view w, int eps)
{
    const auto q = index.encode_query(w);
    SearchResult<int> result;
    const auto bins = enumerate_bins(index, q, eps, &result.stats);
    for (std::size_t b : bins) {
        const auto& bin = index.directory()[b];
        ++result.stats.blocks_opened;
        for (std::uint64_t i = bin.begin; i < bin.end; ++i) {
            ++result.stats.points_scanned;
            const int d = ordinal_distance(index.quasimetric(), q, index.ordinals(i));
            if (d <= eps) {
                result.matches.push_back({std::size_t(i), d});
                result.stats.occurrences_matched += index.count(i);
            }
        }
    }
    return result;
}

SearchResult<int> knn(const FragmentIndex& index, std::span<const std::uint8_t> w, std::size_t k)
{
    if (k == 0)
        throw ArgumentError("k must be at least 1");
    if (w.size() != index.m())
        throw ArgumentError("query length differs from fragment length");
    const auto& dir = index.directory();
    const auto& tbl = index.table();
    const std::size_t m = index.m();
    const std::size_t groups = index.partition().size();

    struct Pending {
        int lb;
        std::size_t lo, hi;
        std::size_t depth;
        std::uint64_t prefix;
    };
    // Least lower bound first; ties in directory (canonical code) order.
    auto later = [](const Pending& a, const Pending& b) {
        return std::tie(a.lb, a.lo, a.depth) > std::tie(b.lb, b.lo, b.depth);
    };
    std::priority_queue<Pending, std::vector<Pending>, decltype(later)> frontier(later);
    // Current best candidates as a max-heap on (distance, position).
    std::priority_queue<std::pair<int, std::size_t>> best;

    SearchResult<int> result;
    auto kth = [&] { return best.size() < k ? std::numeric_limits<int>::max() : best.top().first; };

    frontier.push({0, 0, dir.size(), 0, 0});
    while (!frontier.empty() && frontier.top().lb <= kth()) {
        const Pending node = frontier.top();
        frontier.pop();
        ++result.stats.nodes_visited;
        if (node.depth == m) {
            const auto& bin = dir[node.lo];
            ++result.stats.blocks_opened;
            for (std::uint64_t i = bin.begin; i < bin.end; ++i) {
                ++result.stats.points_scanned;
                const std::pair<int, std::size_t> cand{ordinal_distance(index.quasimetric(), w, index.ordinals(i)),
                                                       std::size_t(i)};
                if (best.size() < k) {
                    best.push(cand);
                } else if (cand < best.top()) {
                    best.pop();
                    best.push(cand);
                }
            }
            continue;
        }
        const std::uint64_t span = index.power(m - node.depth - 1);
        for (std::size_t g = 0; g < groups; ++g) {
            const std::uint64_t child = node.prefix * groups + g;
            const auto [clo, chi] = directory_range(dir, node.lo, node.hi, child * span, (child + 1) * span);
            if (clo == chi)
                continue;
            ++result.stats.decisions_evaluated;
            const int clb = node.lb + tbl(w[node.depth], g);
            if (clb <= kth())
                frontier.push({clb, clo, chi, node.depth + 1, child});
        }
    }

    result.matches.resize(best.size());
    for (std::size_t j = best.size(); j-- > 0;) {
        result.matches[j] = {best.top().second, best.top().first};
        best.pop();
    }
    for (const auto& mt : result.matches)
        result.stats.occurrences_matched += index.count(mt.index);
    return result;
}

SearchResult<int> knn(const FragmentIndex& index, std::string_view w, std::size_t k)
{
    return knn(index, index.encode_query(w), k);
}

} // namespace qmidx
