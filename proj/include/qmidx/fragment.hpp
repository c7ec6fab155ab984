#ifndef QMIDX_FRAGMENT_HPP
#define QMIDX_FRAGMENT_HPP

#include <array>
#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <span>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "qmidx/matrix.hpp"
#include "qmidx/scheme.hpp"

namespace qmidx {

// Disjoint, non-empty symbol groups covering an alphabet.
class Partition {
public:
    Partition(const Alphabet& alphabet, std::vector<std::string> groups);

    // One group per line, symbols concatenated (e.g. "TSAN"); '#' comments
    // and blank lines are skipped.
    static Partition parse(std::istream& in, const Alphabet& alphabet);
    static Partition load(const std::filesystem::path& path, const Alphabet& alphabet);

    std::size_t size() const noexcept { return groups_.size(); }
    const std::vector<std::string>& groups() const noexcept { return groups_; }
    const Alphabet& alphabet() const noexcept { return alphabet_; }
    std::size_t group_of(char c) const { return group_of_ordinal_.at(alphabet_.index_of(c)); }
    std::size_t group_of_ordinal(std::size_t ordinal) const { return group_of_ordinal_[ordinal]; }

    friend bool operator==(const Partition& a, const Partition& b)
    {
        return a.alphabet_ == b.alphabet_ && a.groups_ == b.groups_;
    }

private:
    Alphabet alphabet_;
    std::vector<std::string> groups_;
    std::vector<std::uint8_t> group_of_ordinal_;
};

// {T,S,A,N}, {I,V,L,M}, {K,R,D,E,Q}, {W,F,Y,H}, {G,P,C}.
std::vector<std::string> default_groups();
Partition default_partition(const Alphabet& alphabet);
Partition default_partition();

// left(a, A) = min_{b in A} d(a, b): the left distance from a symbol to a
// group. Rows are symbol ordinals, columns group ordinals.
struct GroupDistTable {
    IntTable left;
    std::vector<std::uint8_t> group_of;  // by symbol ordinal

    int operator()(std::size_t symbol, std::size_t group) const { return left(symbol, group); }
    std::size_t groups() const noexcept { return std::size_t(left.cols()); }
};

GroupDistTable group_dist_table(const SymbolQuasiMetric& qm, const Partition& p);

// Cylinder identifier A_1...A_m. The canonical encoding reads the digits as
// a base-|groups| number, digit 0 most significant.
struct BinCode {
    std::vector<std::uint8_t> digits;

    std::uint64_t encode(std::size_t base) const;
    static BinCode decode(std::uint64_t value, std::size_t base, std::size_t m);
    friend bool operator==(const BinCode&, const BinCode&) = default;
};

BinCode bin_code(std::string_view fragment, const Partition& p);

// Left distance from w to the cylinder fixed by `prefix` (the first l digits):
// sum_{i<l} left(w_i, prefix_i). Positions after the prefix are free.
int cylinder_lb(std::span<const std::uint8_t> query, std::span<const std::uint8_t> prefix,
                const GroupDistTable& tbl) noexcept;
int cylinder_lb(std::string_view query, const BinCode& prefix, const GroupDistTable& tbl,
                const Alphabet& alphabet);

struct FragmentCount {
    std::string fragment;
    std::uint64_t count = 1;
};

// Fragments of length m binned by group code. Unique fragments are stored
// once, packed as symbol ordinals, sorted by (code, lexicographic) so every
// bin is a contiguous range.
class FragmentIndex {
public:
    struct Bin {
        std::uint64_t code;
        std::uint64_t begin;
        std::uint64_t end;
        friend bool operator==(const Bin&, const Bin&) = default;
    };

    FragmentIndex(std::span<const FragmentCount> fragments, Partition partition, SymbolQuasiMetric qm);
    FragmentIndex(std::span<const std::string> fragments, Partition partition, SymbolQuasiMetric qm);

    // Reassembles an index from stored parts; validates every invariant.
    static FragmentIndex from_parts(std::size_t m, Partition partition, SymbolQuasiMetric qm,
                                    std::vector<std::uint8_t> symbols, std::vector<Bin> directory,
                                    std::vector<std::uint64_t> counts);

    std::size_t m() const noexcept { return m_; }
    std::size_t size() const noexcept { return counts_.size(); }
    std::uint64_t total_occurrences() const noexcept;
    std::uint64_t bin_count() const noexcept { return powers_[m_]; }

    const Alphabet& alphabet() const noexcept { return qm_.alphabet(); }
    const Partition& partition() const noexcept { return partition_; }
    const SymbolQuasiMetric& quasimetric() const noexcept { return qm_; }
    const GroupDistTable& table() const noexcept { return table_; }
    const std::vector<Bin>& directory() const noexcept { return directory_; }
    const std::vector<std::uint8_t>& symbols() const noexcept { return symbols_; }
    const std::vector<std::uint64_t>& counts() const noexcept { return counts_; }

    std::span<const std::uint8_t> ordinals(std::size_t i) const { return {symbols_.data() + i * m_, m_}; }
    std::string fragment(std::size_t i) const { return alphabet().decode(ordinals(i)); }
    std::uint64_t count(std::size_t i) const { return counts_.at(i); }
    std::uint64_t code_of(std::span<const std::uint8_t> ordinals) const noexcept;
    // |groups|^j for j = 0..m.
    std::uint64_t power(std::size_t j) const { return powers_.at(j); }

    // Validates length and symbols of a query string.
    std::vector<std::uint8_t> encode_query(std::string_view w) const;

private:
    FragmentIndex(std::size_t m, Partition partition, SymbolQuasiMetric qm);
    void build(std::vector<std::pair<std::vector<std::uint8_t>, std::uint64_t>> items);
    void validate() const;

    std::size_t m_;
    Partition partition_;
    SymbolQuasiMetric qm_;
    GroupDistTable table_;
    std::vector<std::uint64_t> powers_;
    std::vector<std::uint8_t> symbols_;
    std::vector<Bin> directory_;
    std::vector<std::uint64_t> counts_;
};

inline FragmentIndex build_index(std::span<const FragmentCount> fragments, const Partition& p,
                                 const SymbolQuasiMetric& qm)
{
    return FragmentIndex(fragments, p, qm);
}

inline FragmentIndex build_index(std::span<const std::string> fragments, const Partition& p,
                                 const SymbolQuasiMetric& qm)
{
    return FragmentIndex(fragments, p, qm);
}

// Directory positions of the nonempty bins whose cylinder lies within left
// distance eps of w, in canonical code order. Depth-first over the prefix
// tree of group strings, pruning prefixes with cylinder_lb > eps and
// prefixes with no nonempty bin below them.
std::vector<std::size_t> enumerate_bins(const FragmentIndex& index, std::string_view w, int eps,
                                        SearchStats* stats = nullptr);
std::vector<std::size_t> enumerate_bins(const FragmentIndex& index, std::span<const std::uint8_t> w, int eps,
                                        SearchStats* stats = nullptr);

// { x in X : d~(w, x) <= eps } in canonical (code, lexicographic) order.
SearchResult<int> range_search(const FragmentIndex& index, std::string_view w, int eps);

// The min(k, |X|) fragments nearest to w, sorted by (distance, code, lex).
// Best-first branch and bound over the prefix tree keyed by cylinder_lb.
SearchResult<int> knn(const FragmentIndex& index, std::string_view w, std::size_t k);
SearchResult<int> knn(const FragmentIndex& index, std::span<const std::uint8_t> w, std::size_t k);

} // namespace qmidx

#endif // QMIDX_FRAGMENT_HPP
