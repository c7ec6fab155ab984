#ifndef QMIDX_MATRIX_HPP
#define QMIDX_MATRIX_HPP

#include <array>
#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include <Eigen/Core>

#include "qmidx/error.hpp"

namespace qmidx {

// Integer |S| x |S| table; row = first argument.
using IntTable = Eigen::Matrix<int, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

// Ordered set of single-character symbols.
class Alphabet {
public:
    Alphabet();
    explicit Alphabet(std::string_view symbols);

    std::size_t size() const noexcept { return symbols_.size(); }
    const std::string& symbols() const noexcept { return symbols_; }
    char symbol(std::size_t ordinal) const { return symbols_.at(ordinal); }

    bool contains(char c) const noexcept { return ordinal_[static_cast<unsigned char>(c)] >= 0; }
    std::optional<std::size_t> find(char c) const noexcept;
    // Throws ArgumentError for a foreign symbol.
    std::size_t index_of(char c) const;

    // Ordinals of every character of `text`; throws ArgumentError on a foreign symbol.
    std::vector<std::uint8_t> encode(std::string_view text) const;
    std::string decode(std::span<const std::uint8_t> ordinals) const;

    friend bool operator==(const Alphabet& a, const Alphabet& b) { return a.symbols_ == b.symbols_; }

private:
    std::string symbols_;
    std::array<std::int16_t, 256> ordinal_;
};

// The 20 standard amino acids in the conventional BLOSUM order.
inline constexpr std::string_view kAminoAcids = "ARNDCQEGHILKMFPSTWYV";

struct ScoringMatrix {
    Alphabet alphabet;
    IntTable scores;

    int score(char a, char b) const { return scores(alphabet.index_of(a), alphabet.index_of(b)); }
};

// Reason a table failed the quasi-metric (or metric) axioms, with the
// offending ordinals. For triangle violations d(a,c) > d(a,b) + d(b,c).
struct AxiomViolation {
    enum class Kind { negative, diagonal, separation, triangle, asymmetric };
    Kind kind;
    std::size_t a, b, c;
};

std::string describe(const AxiomViolation& v, const Alphabet& alphabet);

class AxiomError : public Error {
public:
    AxiomError(AxiomViolation v, const Alphabet& alphabet)
        : Error("quasi-metric axiom failure: " + describe(v, alphabet)), violation_(v) {}
    const AxiomViolation& violation() const noexcept { return violation_; }

private:
    AxiomViolation violation_;
};

// Exhaustive scan of the quasi-metric axioms over all |S|^3 triples.
// Returns the first violation in (a, b, c) lexicographic order.
template <typename Derived>
std::optional<AxiomViolation> find_quasimetric_violation(const Eigen::MatrixBase<Derived>& d)
{
    using Kind = AxiomViolation::Kind;
    const Eigen::Index n = d.rows();
    for (Eigen::Index a = 0; a < n; ++a) {
        if (d(a, a) != 0)
            return AxiomViolation{Kind::diagonal, std::size_t(a), std::size_t(a), std::size_t(a)};
        for (Eigen::Index b = 0; b < n; ++b) {
            if (d(a, b) < 0)
                return AxiomViolation{Kind::negative, std::size_t(a), std::size_t(b), std::size_t(b)};
            if (a != b && d(a, b) == 0)
                return AxiomViolation{Kind::separation, std::size_t(a), std::size_t(b), std::size_t(b)};
        }
    }
    for (Eigen::Index a = 0; a < n; ++a)
        for (Eigen::Index b = 0; b < n; ++b)
            for (Eigen::Index c = 0; c < n; ++c)
                if (d(a, c) > d(a, b) + d(b, c))
                    return AxiomViolation{Kind::triangle, std::size_t(a), std::size_t(b), std::size_t(c)};
    return std::nullopt;
}

template <typename Derived>
std::optional<AxiomViolation> find_metric_violation(const Eigen::MatrixBase<Derived>& d)
{
    const Eigen::Index n = d.rows();
    for (Eigen::Index a = 0; a < n; ++a)
        for (Eigen::Index b = a + 1; b < n; ++b)
            if (d(a, b) != d(b, a))
                return AxiomViolation{AxiomViolation::Kind::asymmetric, std::size_t(a), std::size_t(b),
                                      std::size_t(b)};
    return find_quasimetric_violation(d);
}

// d(a, b) over a finite alphabet satisfying separation and the triangle
// inequality, but not necessarily symmetry. Valid by construction.
class SymbolQuasiMetric {
public:
    // Throws AxiomError carrying a witness if `table` is not a quasi-metric.
    SymbolQuasiMetric(Alphabet alphabet, IntTable table);

    const Alphabet& alphabet() const noexcept { return alphabet_; }
    const IntTable& table() const noexcept { return table_; }
    int operator()(std::size_t a, std::size_t b) const { return table_(a, b); }
    int distance(char a, char b) const { return table_(alphabet_.index_of(a), alphabet_.index_of(b)); }
    bool symmetric() const { return table_ == table_.transpose(); }
    int max_entry() const { return table_.maxCoeff(); }

private:
    Alphabet alphabet_;
    IntTable table_;
};

enum class MetricMode { max, sum };

// Symmetric majorant of a quasi-metric. Not rescaled; `mode` records how
// it was formed so callers can rescale.
class SymbolMetric {
public:
    SymbolMetric(Alphabet alphabet, IntTable table, MetricMode mode);

    const Alphabet& alphabet() const noexcept { return alphabet_; }
    const IntTable& table() const noexcept { return table_; }
    MetricMode mode() const noexcept { return mode_; }
    int operator()(std::size_t a, std::size_t b) const { return table_(a, b); }
    int distance(char a, char b) const { return table_(alphabet_.index_of(a), alphabet_.index_of(b)); }

private:
    Alphabet alphabet_;
    IntTable table_;
    MetricMode mode_;
};

// Whitespace-separated matrix text: optional '#' comment lines, a header of
// column symbols, then one `SYMBOL v1 ... vn` row per symbol.
ScoringMatrix parse_scoring_matrix(std::istream& in);
ScoringMatrix load_scoring_matrix(const std::filesystem::path& path);

// d(a, b) = s(a, a) - s(a, b), validated exhaustively.
SymbolQuasiMetric derive_symbol_quasimetric(const ScoringMatrix& m);

SymbolMetric associated_metric(const SymbolQuasiMetric& d, MetricMode mode);

// Smallest c = num/den with metric(a, b) <= c * qm(a, b) for all symbols.
// Since per-position sums inherit it, the metric ball of radius c * eps
// contains the quasi-metric left ball of radius eps.
struct MajorantScale {
    int num = 1;
    int den = 1;

    // floor(c * eps) for eps >= 0.
    int widen(int eps) const { return int((long long)eps * num / den); }
};

MajorantScale majorant_scale(const SymbolQuasiMetric& qm, const SymbolMetric& metric);

// Sum of per-position symbol distances over ordinal strings of equal length.
// No validation: callers guarantee lengths and ordinal ranges.
template <typename Table>
int ordinal_distance(const Table& d, std::span<const std::uint8_t> x, std::span<const std::uint8_t> y) noexcept
{
    int sum = 0;
    for (std::size_t i = 0; i < x.size(); ++i)
        sum += d(x[i], y[i]);
    return sum;
}

// d~(x, y) = sum_i d(x_i, y_i). Throws ArgumentError on length mismatch or
// a foreign symbol.
int string_qdist(std::string_view x, std::string_view y, const SymbolQuasiMetric& d);
int string_dist(std::string_view x, std::string_view y, const SymbolMetric& d);

} // namespace qmidx

#endif // QMIDX_MATRIX_HPP
