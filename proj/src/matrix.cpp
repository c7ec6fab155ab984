#include "qmidx/matrix.hpp"

#include <cctype>
#include <numeric>
#include <charconv>
#include <fstream>
#include <istream>
#include <sstream>
#include <vector>

namespace qmidx {

Alphabet::Alphabet() { ordinal_.fill(-1); }

Alphabet::Alphabet(std::string_view symbols) : Alphabet()
{
    if (symbols.size() > 255)
        throw ArgumentError("alphabet too large");
    for (char c : symbols) {
        auto& slot = ordinal_[static_cast<unsigned char>(c)];
        if (slot >= 0)
            throw ArgumentError(std::string("duplicate alphabet symbol '") + c + "'");
        slot = static_cast<std::int16_t>(symbols_.size());
        symbols_.push_back(c);
    }
}

std::optional<std::size_t> Alphabet::find(char c) const noexcept
{
    const auto o = ordinal_[static_cast<unsigned char>(c)];
    if (o < 0)
        return std::nullopt;
    return static_cast<std::size_t>(o);
}

std::size_t Alphabet::index_of(char c) const
{
    const auto o = ordinal_[static_cast<unsigned char>(c)];
    if (o < 0)
        throw ArgumentError(std::string("symbol '") + c + "' is not in the alphabet");
    return static_cast<std::size_t>(o);
}

std::vector<std::uint8_t> Alphabet::encode(std::string_view text) const
{
    std::vector<std::uint8_t> out(text.size());
    for (std::size_t i = 0; i < text.size(); ++i)
        out[i] = static_cast<std::uint8_t>(index_of(text[i]));
    return out;
}

std::string Alphabet::decode(std::span<const std::uint8_t> ordinals) const
{
    std::string out(ordinals.size(), '\0');
    for (std::size_t i = 0; i < ordinals.size(); ++i)
        out[i] = symbols_.at(ordinals[i]);
    return out;
}

std::string describe(const AxiomViolation& v, const Alphabet& alphabet)
{
    auto sym = [&](std::size_t o) { return std::string(1, alphabet.symbol(o)); };
    switch (v.kind) {
    case AxiomViolation::Kind::negative:
        return "negative distance d(" + sym(v.a) + "," + sym(v.b) + ")";
    case AxiomViolation::Kind::diagonal:
        return "nonzero self-distance d(" + sym(v.a) + "," + sym(v.a) + ")";
    case AxiomViolation::Kind::separation:
        return "zero distance between distinct symbols d(" + sym(v.a) + "," + sym(v.b) + ")";
    case AxiomViolation::Kind::triangle:
        return "triangle inequality fails: d(" + sym(v.a) + "," + sym(v.c) + ") > d(" + sym(v.a) + "," +
               sym(v.b) + ") + d(" + sym(v.b) + "," + sym(v.c) + ")";
    case AxiomViolation::Kind::asymmetric:
        return "asymmetric pair d(" + sym(v.a) + "," + sym(v.b) + ") != d(" + sym(v.b) + "," + sym(v.a) + ")";
    }
    return "unknown violation";
}

SymbolQuasiMetric::SymbolQuasiMetric(Alphabet alphabet, IntTable table)
    : alphabet_(std::move(alphabet)), table_(std::move(table))
{
    if (table_.rows() != static_cast<Eigen::Index>(alphabet_.size()) || table_.cols() != table_.rows())
        throw ArgumentError("distance table shape does not match the alphabet");
    if (auto v = find_quasimetric_violation(table_))
        throw AxiomError(*v, alphabet_);
}

SymbolMetric::SymbolMetric(Alphabet alphabet, IntTable table, MetricMode mode)
    : alphabet_(std::move(alphabet)), table_(std::move(table)), mode_(mode)
{
    if (table_.rows() != static_cast<Eigen::Index>(alphabet_.size()) || table_.cols() != table_.rows())
        throw ArgumentError("distance table shape does not match the alphabet");
    if (auto v = find_metric_violation(table_))
        throw AxiomError(*v, alphabet_);
}

namespace {

bool blank_or_comment(std::string_view line)
{
    const auto p = line.find_first_not_of(" \t\r");
    return p == std::string_view::npos || line[p] == '#';
}

std::vector<std::string> split_ws(const std::string& line)
{
    std::istringstream ss(line);
    std::vector<std::string> out;
    for (std::string tok; ss >> tok;)
        out.push_back(tok);
    return out;
}

char symbol_token(const std::string& tok, std::size_t line)
{
    if (tok.size() != 1 || !std::isalpha(static_cast<unsigned char>(tok[0])))
        throw ParseError(line, "expected a single-letter symbol, got '" + tok + "'");
    return tok[0];
}

} // namespace

ScoringMatrix parse_scoring_matrix(std::istream& in)
{
    std::string line;
    std::size_t lineno = 0;
    std::string header;
    std::size_t header_line = 0;
    while (std::getline(in, line)) {
        ++lineno;
        if (blank_or_comment(line))
            continue;
        for (const auto& tok : split_ws(line))
            header.push_back(symbol_token(tok, lineno));
        header_line = lineno;
        break;
    }
    if (header.empty())
        throw ParseError(lineno, "missing symbol header");

    Alphabet alphabet;
    try {
        alphabet = Alphabet(header);
    } catch (const ArgumentError& e) {
        throw ParseError(header_line, e.what());
    }

    const auto n = static_cast<Eigen::Index>(alphabet.size());
    IntTable scores(n, n);
    std::vector<bool> seen(alphabet.size(), false);
    std::size_t rows = 0;
    while (std::getline(in, line)) {
        ++lineno;
        if (blank_or_comment(line))
            continue;
        const auto tokens = split_ws(line);
        const char label = symbol_token(tokens[0], lineno);
        const auto row = alphabet.find(label);
        if (!row)
            throw ParseError(lineno, std::string("row symbol '") + label + "' is not in the header");
        if (seen[*row])
            throw ParseError(lineno, std::string("duplicate row symbol '") + label + "'");
        if (tokens.size() != alphabet.size() + 1)
            throw ParseError(lineno, "expected " + std::to_string(alphabet.size()) + " values, got " +
                                         std::to_string(tokens.size() - 1));
        for (std::size_t j = 0; j < alphabet.size(); ++j) {
            const auto& tok = tokens[j + 1];
            int value = 0;
            const auto [ptr, ec] = std::from_chars(tok.data(), tok.data() + tok.size(), value);
            if (ec != std::errc() || ptr != tok.data() + tok.size())
                throw ParseError(lineno, "non-integer cell '" + tok + "'");
            scores(static_cast<Eigen::Index>(*row), static_cast<Eigen::Index>(j)) = value;
        }
        seen[*row] = true;
        ++rows;
    }
    if (rows != alphabet.size())
        throw ParseError(lineno, "expected " + std::to_string(alphabet.size()) + " rows, got " +
                                     std::to_string(rows));
    return ScoringMatrix{std::move(alphabet), std::move(scores)};
}

ScoringMatrix load_scoring_matrix(const std::filesystem::path& path)
{
    std::ifstream in(path);
    if (!in)
        throw ArgumentError("cannot open scoring matrix " + path.string());
    return parse_scoring_matrix(in);
}

SymbolQuasiMetric derive_symbol_quasimetric(const ScoringMatrix& m)
{
    const IntTable d = m.scores.diagonal().replicate(1, m.scores.cols()) - m.scores;
    return SymbolQuasiMetric(m.alphabet, d);
}

SymbolMetric associated_metric(const SymbolQuasiMetric& d, MetricMode mode)
{
    const IntTable& t = d.table();
    IntTable out = mode == MetricMode::max ? IntTable(t.cwiseMax(t.transpose())) : IntTable(t + t.transpose());
    return SymbolMetric(d.alphabet(), std::move(out), mode);
}

namespace {

template <typename Dist>
int string_distance(std::string_view x, std::string_view y, const Dist& d)
{
    if (x.size() != y.size())
        throw ArgumentError("length mismatch: " + std::to_string(x.size()) + " vs " + std::to_string(y.size()));
    const auto& alphabet = d.alphabet();
    int sum = 0;
    for (std::size_t i = 0; i < x.size(); ++i)
        sum += d(alphabet.index_of(x[i]), alphabet.index_of(y[i]));
    return sum;
}

} // namespace

int string_qdist(std::string_view x, std::string_view y, const SymbolQuasiMetric& d)
{
    return string_distance(x, y, d);
}

int string_dist(std::string_view x, std::string_view y, const SymbolMetric& d) { return string_distance(x, y, d); }

MajorantScale majorant_scale(const SymbolQuasiMetric& qm, const SymbolMetric& metric)
{
    if (!(qm.alphabet() == metric.alphabet()))
        throw ArgumentError("quasi-metric and metric use different alphabets");
    MajorantScale c;
    const auto n = qm.table().rows();
    for (Eigen::Index a = 0; a < n; ++a)
        for (Eigen::Index b = 0; b < n; ++b) {
            if (a == b)
                continue;
            const int num = metric.table()(a, b), den = qm.table()(a, b);
            if ((long long)num * c.den > (long long)c.num * den)
                c = {num, den};
        }
    const int g = std::gcd(c.num, c.den);
    return {c.num / g, c.den / g};
}

} // namespace qmidx
