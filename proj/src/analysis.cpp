#include "qmidx/analysis.hpp"

#include <bit>
#include <cmath>
#include <fstream>
#include <istream>
#include <map>
#include <numeric>
#include <ostream>
#include <sstream>

#include <Eigen/QR>

namespace qmidx {

namespace {

constexpr double kMeasureTol = 1e-12;
constexpr double kCeilTol = 1e-9;

std::uint64_t ceil_bound(double v)
{
    return static_cast<std::uint64_t>(std::ceil(v - kCeilTol));
}

void check_grid(std::span<const double> grid)
{
    for (std::size_t i = 0; i < grid.size(); ++i) {
        if (!(grid[i] >= 0))
            throw DomainError("eps grid values must be nonnegative");
        if (i > 0 && !(grid[i] > grid[i - 1]))
            throw DomainError("eps grid must be strictly increasing");
    }
}

} // namespace

EmpiricalMMSpace::EmpiricalMMSpace(Eigen::MatrixXd distances, std::optional<Eigen::VectorXd> weights)
    : dist_(std::move(distances))
{
    const auto n = dist_.rows();
    if (n == 0 || dist_.cols() != n)
        throw DomainError("distance matrix must be square and nonempty");
    if ((dist_.array() < 0).any() || !dist_.allFinite())
        throw DomainError("distances must be finite and nonnegative");
    if (dist_ != dist_.transpose())
        throw DomainError("an mm-space needs a symmetric distance; this one is not");
    if (weights) {
        if (weights->size() != n)
            throw DomainError("weight vector length differs from the number of points");
        if ((weights->array() < 0).any())
            throw DomainError("weights must be nonnegative");
        if (std::abs(weights->sum() - 1.0) > kMeasureTol)
            throw DomainError("weights must sum to 1");
        weights_ = std::move(*weights);
    } else {
        weights_ = Eigen::VectorXd::Constant(n, 1.0 / double(n));
    }
}

std::vector<double> EmpiricalMMSpace::distance_values() const
{
    std::vector<double> v;
    for (Eigen::Index i = 0; i < dist_.rows(); ++i)
        for (Eigen::Index j = i + 1; j < dist_.cols(); ++j)
            if (dist_(i, j) > 0)
                v.push_back(dist_(i, j));
    std::sort(v.begin(), v.end());
    v.erase(std::unique(v.begin(), v.end()), v.end());
    return v;
}

std::vector<double> distance_grid(const EmpiricalMMSpace& space)
{
    std::vector<double> g{0.0};
    const auto d = space.distance_values();
    g.insert(g.end(), d.begin(), d.end());
    return g;
}

const char* to_string(EstimatorKind k)
{
    return k == EstimatorKind::exact_subset ? "exact" : "lower_bound";
}

double ConcentrationEstimate::at(double eps) const
{
    auto it = std::upper_bound(eps_grid.begin(), eps_grid.end(), eps);
    if (it == eps_grid.begin())
        return 0.5;
    const auto i = std::size_t(it - eps_grid.begin()) - 1;
    if (eps_grid[i] == 0 && eps > 0)
        return alpha_0plus;
    return alpha_hat[i];
}

ConcentrationEstimate concentration_exact(const EmpiricalMMSpace& space, std::span<const double> eps_grid,
                                          std::size_t cap)
{
    const std::size_t n = space.size();
    if (n > cap || n > 30)
        throw DomainError("exact concentration is limited to " + std::to_string(std::min<std::size_t>(cap, 30)) +
                          " points; use the anchor estimator");
    check_grid(eps_grid);

    const std::size_t subsets = std::size_t(1) << n;
    std::vector<double> mu(subsets, 0.0);
    for (std::size_t s = 1; s < subsets; ++s) {
        const auto low = std::size_t(std::countr_zero(s));
        mu[s] = mu[s & (s - 1)] + space.weight(low);
    }
    std::vector<std::uint32_t> fat(subsets, 0);
    std::vector<std::uint32_t> nbr(n);

    // 1 - min { mu(A_t) : mu(A) >= 1/2 }, with closed neighbourhoods.
    auto alpha_at = [&](double t) {
        for (std::size_t a = 0; a < n; ++a) {
            nbr[a] = 0;
            for (std::size_t x = 0; x < n; ++x)
                if (space.distance(a, x) <= t)
                    nbr[a] |= std::uint32_t(1) << x;
        }
        double best = 1.0;
        for (std::size_t s = 1; s < subsets; ++s) {
            fat[s] = fat[s & (s - 1)] | nbr[std::size_t(std::countr_zero(s))];
            if (mu[s] >= 0.5 - kMeasureTol)
                best = std::min(best, mu[fat[s]]);
        }
        return std::max(0.0, 1.0 - best);
    };

    ConcentrationEstimate est;
    est.kind = EstimatorKind::exact_subset;
    est.eps_grid.assign(eps_grid.begin(), eps_grid.end());
    est.alpha_0plus = std::min(0.5, alpha_at(0.0));
    for (double e : eps_grid)
        est.alpha_hat.push_back(e == 0 ? 0.5 : alpha_at(e));
    return est;
}

ConcentrationEstimate concentration_anchor(const EmpiricalMMSpace& space, std::span<const double> eps_grid,
                                           std::span<const std::size_t> anchors)
{
    if (anchors.empty())
        throw ArgumentError("the anchor estimator needs at least one anchor");
    check_grid(eps_grid);
    const std::size_t n = space.size();

    ConcentrationEstimate est;
    est.kind = EstimatorKind::anchor_family;
    est.eps_grid.assign(eps_grid.begin(), eps_grid.end());
    est.alpha_hat.assign(eps_grid.size(), 0.0);
    est.alpha_0plus = 0.0;

    std::vector<std::size_t> order(n);
    std::vector<double> gap(n);
    for (std::size_t w : anchors) {
        if (w >= n)
            throw ArgumentError("anchor index out of range");
        std::iota(order.begin(), order.end(), std::size_t(0));
        std::sort(order.begin(), order.end(),
                  [&](std::size_t a, std::size_t b) { return space.distance(w, a) < space.distance(w, b); });
        // Smallest closed ball about w of measure >= 1/2; ties are all in.
        double mass = 0, radius = 0;
        for (std::size_t i = 0; i < n; ++i) {
            mass += space.weight(order[i]);
            radius = space.distance(w, order[i]);
            if (mass >= 0.5 - kMeasureTol && (i + 1 == n || space.distance(w, order[i + 1]) > radius))
                break;
        }
        std::fill(gap.begin(), gap.end(), std::numeric_limits<double>::infinity());
        for (std::size_t a = 0; a < n; ++a) {
            if (space.distance(w, a) > radius)
                continue;
            for (std::size_t x = 0; x < n; ++x)
                gap[x] = std::min(gap[x], space.distance(a, x));
        }
        auto fattened = [&](double t) {
            double m = 0;
            for (std::size_t x = 0; x < n; ++x)
                if (gap[x] <= t)
                    m += space.weight(x);
            return std::max(0.0, 1.0 - m);
        };
        est.alpha_0plus = std::max(est.alpha_0plus, fattened(0.0));
        for (std::size_t i = 0; i < eps_grid.size(); ++i)
            est.alpha_hat[i] = std::max(est.alpha_hat[i], eps_grid[i] == 0 ? 0.5 : fattened(eps_grid[i]));
    }
    est.alpha_0plus = std::min(est.alpha_0plus, 0.5);
    return est;
}

double alpha_inverse(const ConcentrationEstimate& est, double x)
{
    if (!est.eps_grid.empty() && est.eps_grid.front() == 0 && est.alpha_0plus <= x)
        return 0.0;
    for (std::size_t i = 0; i < est.eps_grid.size(); ++i)
        if (est.eps_grid[i] > 0 && est.alpha_hat[i] <= x)
            return est.eps_grid[i];
    return std::numeric_limits<double>::infinity();
}

ConcentrationBounds rngconc_bounds(double xi, double eps, const ConcentrationEstimate& est)
{
    if (!(xi > 0 && xi <= 0.25))
        throw DomainError("xi must lie in (0, 1/4]");
    const double delta = alpha_inverse(est, xi);
    if (!(eps > delta))
        throw DomainError("eps must exceed alpha_inverse(xi)");
    const double a = est.at(eps - delta);
    const std::uint64_t by_xi = ceil_bound(1.0 / (2.0 * xi));
    ConcentrationBounds b{by_xi, by_xi, delta, a};
    if (a > 0) {
        b.average = std::min(by_xi, ceil_bound(1.0 / (4.0 * a)));
        b.worst = std::min(by_xi, ceil_bound(1.0 / a - 1.0));
    }
    return b;
}

std::vector<GrowthRow> neighbourhood_growth(std::span<const int> nearest_distances, std::span<const double> radii)
{
    if (nearest_distances.empty())
        throw ArgumentError("neighbourhood_growth needs at least one sample");
    std::vector<int> d(nearest_distances.begin(), nearest_distances.end());
    std::sort(d.begin(), d.end());
    std::vector<GrowthRow> rows;
    for (double r : radii) {
        const auto within = std::upper_bound(d.begin(), d.end(), r,
                                             [](double v, int x) { return v < double(x); }) -
                            d.begin();
        rows.push_back({r, double(within) / double(d.size())});
    }
    return rows;
}

double distance_exponent(std::span<const GrowthRow> rows, FitWindow window)
{
    std::vector<std::pair<double, double>> pts;
    for (const auto& r : rows)
        if (r.radius > 0 && r.fraction > 0 && r.radius >= window.min_radius && r.radius <= window.max_radius)
            pts.emplace_back(std::log(r.radius), std::log(r.fraction));
    if (pts.size() < 2)
        throw DomainError("distance exponent needs at least two rows with positive radius and fraction");
    const bool one_radius = std::all_of(pts.begin(), pts.end(), [&](const auto& p) { return p.first == pts[0].first; });
    if (one_radius)
        throw DomainError("distance exponent needs at least two distinct radii");
    Eigen::MatrixXd a(Eigen::Index(pts.size()), 2);
    Eigen::VectorXd b(Eigen::Index(pts.size()));
    for (std::size_t i = 0; i < pts.size(); ++i) {
        a(Eigen::Index(i), 0) = 1.0;
        a(Eigen::Index(i), 1) = pts[i].first;
        b(Eigen::Index(i)) = pts[i].second;
    }
    const Eigen::Vector2d coef = a.colPivHouseholderQr().solve(b);
    return coef(1);
}

std::vector<HistogramRow> bin_histogram(const FragmentIndex& index)
{
    std::map<std::uint64_t, std::uint64_t> by_size;
    for (const auto& bin : index.directory())
        ++by_size[bin.end - bin.begin];
    std::vector<HistogramRow> rows;
    const std::uint64_t empty = index.bin_count() - index.directory().size();
    if (empty > 0)
        rows.push_back({0, empty});
    for (const auto& [size, bins] : by_size)
        rows.push_back({size, bins});
    return rows;
}

ProductSampler::ProductSampler(const Alphabet& alphabet)
    : ProductSampler(alphabet, std::vector<double>(alphabet.size(), 1.0))
{
}

ProductSampler::ProductSampler(const Alphabet& alphabet, std::span<const double> weights)
    : alphabet_(alphabet), weights_(weights.begin(), weights.end())
{
    if (weights_.size() != alphabet_.size())
        throw ArgumentError("one weight per alphabet symbol is required");
    double total = 0;
    for (double w : weights_) {
        if (!(w >= 0) || !std::isfinite(w))
            throw ArgumentError("symbol weights must be finite and nonnegative");
        total += w;
    }
    if (!(total > 0))
        throw ArgumentError("symbol weights must not all be zero");
}

ProductSampler ProductSampler::parse(std::istream& in, const Alphabet& alphabet)
{
    std::vector<double> w(alphabet.size(), 0.0);
    std::vector<bool> seen(alphabet.size(), false);
    std::string line;
    std::size_t lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        const auto first = line.find_first_not_of(" \t\r");
        if (first == std::string::npos || line[first] == '#')
            continue;
        std::istringstream fields(line);
        std::string sym, prob, extra;
        fields >> sym >> prob;
        if (sym.size() != 1 || prob.empty() || (fields >> extra))
            throw ParseError(lineno, "expected 'symbol probability'");
        const auto o = alphabet.find(sym[0]);
        if (!o)
            throw ParseError(lineno, "symbol '" + sym + "' is not in the alphabet");
        if (seen[*o])
            throw ParseError(lineno, "duplicate symbol '" + sym + "'");
        seen[*o] = true;
        std::size_t used = 0;
        double p = 0;
        try {
            p = std::stod(prob, &used);
        } catch (const std::exception&) {
            used = 0;
        }
        if (used != prob.size() || !(p >= 0) || !std::isfinite(p))
            throw ParseError(lineno, "invalid probability '" + prob + "'");
        w[*o] = p;
    }
    try {
        return ProductSampler(alphabet, w);
    } catch (const ArgumentError& e) {
        throw ParseError(lineno, e.what());
    }
}

ProductSampler ProductSampler::load(const std::filesystem::path& path, const Alphabet& alphabet)
{
    std::ifstream in(path);
    if (!in)
        throw Error("cannot open frequency file " + path.string());
    return parse(in, alphabet);
}

std::vector<std::uint8_t> ProductSampler::sample(std::size_t m, std::mt19937_64& rng) const
{
    std::discrete_distribution<std::size_t> pick(weights_.begin(), weights_.end());
    std::vector<std::uint8_t> out(m);
    for (auto& o : out)
        o = static_cast<std::uint8_t>(pick(rng));
    return out;
}

std::string ProductSampler::sample_string(std::size_t m, std::mt19937_64& rng) const
{
    return alphabet_.decode(sample(m, rng));
}

std::vector<ValueCount> cert_value_distribution(const FragmentIndex& index, std::string_view anchor, CertAnchor kind,
                                                std::size_t samples, const ProductSampler& sampler,
                                                std::uint64_t seed)
{
    if (!(sampler.alphabet() == index.alphabet()))
        throw ArgumentError("sampler alphabet differs from the index alphabet");
    const auto a = index.encode_query(anchor);
    std::vector<std::uint8_t> digits(a.size());
    for (std::size_t i = 0; i < a.size(); ++i)
        digits[i] = index.table().group_of[a[i]];
    std::mt19937_64 rng(seed);
    std::map<int, std::uint64_t> hist;
    for (std::size_t s = 0; s < samples; ++s) {
        const auto w = sampler.sample(index.m(), rng);
        const int v = kind == CertAnchor::point ? ordinal_distance(index.quasimetric().table(), w, a)
                                                : cylinder_lb(w, digits, index.table());
        ++hist[v];
    }
    std::vector<ValueCount> rows;
    for (const auto& [v, c] : hist)
        rows.push_back({v, c});
    return rows;
}

void write_growth_csv(std::ostream& out, std::span<const GrowthRow> rows)
{
    out << "radius,fraction\n";
    for (const auto& r : rows)
        out << r.radius << ',' << r.fraction << '\n';
}

void write_ratio_csv(std::ostream& out, std::span<const RatioRow> rows)
{
    out << "k,ratio_mean,ratio_max\n";
    for (const auto& r : rows)
        out << r.k << ',' << r.ratio_mean << ',' << r.ratio_max << '\n';
}

void write_histogram_csv(std::ostream& out, std::span<const HistogramRow> rows)
{
    out << "size,bins\n";
    for (const auto& r : rows)
        out << r.size << ',' << r.bins << '\n';
}

void write_concentration_csv(std::ostream& out, const ConcentrationEstimate& est)
{
    out << "eps,alpha_hat,kind\n";
    for (std::size_t i = 0; i < est.eps_grid.size(); ++i)
        out << est.eps_grid[i] << ',' << est.alpha_hat[i] << ',' << to_string(est.kind) << '\n';
}

void write_value_csv(std::ostream& out, std::span<const ValueCount> rows)
{
    out << "value,count\n";
    for (const auto& r : rows)
        out << r.value << ',' << r.count << '\n';
}

} // namespace qmidx
