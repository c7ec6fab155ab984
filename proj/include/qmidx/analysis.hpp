#ifndef QMIDX_ANALYSIS_HPP
#define QMIDX_ANALYSIS_HPP

#include <algorithm>
#include <filesystem>
#include <cstdint>
#include <iosfwd>
#include <limits>
#include <optional>
#include <random>
#include <span>
#include <string>
#include <vector>

#include <Eigen/Core>

#include "qmidx/fragment.hpp"

namespace qmidx {

// Finite metric space with a probability measure. Distances are symmetric;
// weights are nonnegative and sum to one.
class EmpiricalMMSpace {
public:
    // Throws DomainError for an asymmetric or negative distance matrix, or
    // for weights that are negative or do not sum to 1 within 1e-12.
    explicit EmpiricalMMSpace(Eigen::MatrixXd distances, std::optional<Eigen::VectorXd> weights = std::nullopt);

    // Normalized counting measure over `points`.
    template <typename Point, typename Dist>
    static EmpiricalMMSpace from_points(const std::vector<Point>& points, Dist&& dist)
    {
        const auto n = static_cast<Eigen::Index>(points.size());
        Eigen::MatrixXd d(n, n);
        for (Eigen::Index i = 0; i < n; ++i)
            for (Eigen::Index j = 0; j < n; ++j)
                d(i, j) = double(dist(points[std::size_t(i)], points[std::size_t(j)]));
        return EmpiricalMMSpace(std::move(d));
    }

    std::size_t size() const noexcept { return std::size_t(dist_.rows()); }
    const Eigen::MatrixXd& distances() const noexcept { return dist_; }
    const Eigen::VectorXd& weights() const noexcept { return weights_; }
    double distance(std::size_t a, std::size_t b) const { return dist_(Eigen::Index(a), Eigen::Index(b)); }
    double weight(std::size_t a) const { return weights_(Eigen::Index(a)); }
    // Sorted distinct positive pairwise distances.
    std::vector<double> distance_values() const;

private:
    Eigen::MatrixXd dist_;
    Eigen::VectorXd weights_;
};

enum class EstimatorKind { exact_subset, anchor_family };
const char* to_string(EstimatorKind k);

// alpha(eps) sampled on an increasing grid. Between grid points the function
// is read as a right-continuous step, which is exact when the grid holds 0
// and every pairwise distance of the space. alpha(0) = 1/2 by convention,
// so the limit from the right at 0 is kept separately.
struct ConcentrationEstimate {
    std::vector<double> eps_grid;
    std::vector<double> alpha_hat;
    EstimatorKind kind = EstimatorKind::exact_subset;
    double alpha_0plus = 0.5;

    // Value at the largest grid point <= eps (alpha_0plus when that point is
    // 0 and eps > 0); 1/2 below the grid.
    double at(double eps) const;
};

// 0 followed by the distinct positive distances of the space.
std::vector<double> distance_grid(const EmpiricalMMSpace& space);

inline constexpr std::size_t kExactConcentrationCap = 20;

// alpha(eps) = 1 - inf { mu(A_eps) : mu(A) >= 1/2 } over every subset A,
// with closed neighbourhoods A_eps = { x : d(A, x) <= eps } and alpha(0) = 1/2.
ConcentrationEstimate concentration_exact(const EmpiricalMMSpace& space, std::span<const double> eps_grid,
                                          std::size_t cap = kExactConcentrationCap);

// Lower bound on alpha: for each anchor, A = smallest closed ball about it
// with mu(A) >= 1/2; alpha_hat(eps) = max over anchors of 1 - mu(A_eps).
ConcentrationEstimate concentration_anchor(const EmpiricalMMSpace& space, std::span<const double> eps_grid,
                                           std::span<const std::size_t> anchors);

// inf { eps > 0 : alpha(eps) <= x } read off the grid: 0 when alpha_0plus
// <= x, else the smallest positive grid eps; +infinity when there is none.
double alpha_inverse(const ConcentrationEstimate& est, double x);

struct ConcentrationBounds {
    std::uint64_t average;  // min{ceil(1/(2 xi)), ceil(1/(4 a))}
    std::uint64_t worst;    // min{ceil(1/(2 xi)), ceil(1/a - 1)}
    double delta;           // alpha_inverse(xi)
    double alpha;           // a = alpha(eps - delta)
};

// Lower bounds on the number of blocks of measure <= xi met by eps-balls,
// on average over centres and for the worst centre. Throws DomainError
// unless 0 < xi <= 1/4 and eps > alpha_inverse(xi).
ConcentrationBounds rngconc_bounds(double xi, double eps, const ConcentrationEstimate& est);

struct GrowthRow {
    double radius;
    double fraction;
};

// Mean over centres of |{x : rho(w, x) <= r}| / |X| for each radius.
template <typename Point, typename Center, typename Dist>
std::vector<GrowthRow> ball_growth(const std::vector<Point>& points, Dist&& rho, const std::vector<Center>& centers,
                                   std::span<const double> radii)
{
    if (centers.empty() || points.empty())
        throw ArgumentError("ball_growth needs points and at least one centre");
    std::vector<double> sums(radii.size(), 0.0);
    std::vector<double> d(points.size());
    for (const auto& c : centers) {
        for (std::size_t i = 0; i < points.size(); ++i)
            d[i] = double(rho(c, points[i]));
        std::sort(d.begin(), d.end());
        for (std::size_t r = 0; r < radii.size(); ++r) {
            const auto within = std::upper_bound(d.begin(), d.end(), radii[r]) - d.begin();
            sums[r] += double(within) / double(points.size());
        }
    }
    std::vector<GrowthRow> rows;
    for (std::size_t r = 0; r < radii.size(); ++r)
        rows.push_back({radii[r], sums[r] / double(centers.size())});
    return rows;
}

// Fraction of sampled domain points whose nearest-datapoint distance is at
// most r: the measure of the r-neighbourhood of the dataset.
std::vector<GrowthRow> neighbourhood_growth(std::span<const int> nearest_distances, std::span<const double> radii);

struct FitWindow {
    double min_radius = 0;
    double max_radius = std::numeric_limits<double>::infinity();
};

// Least-squares slope of log(fraction) against log(radius) over rows with
// positive radius and fraction inside the window. Throws DomainError for
// fewer than two usable rows or a single distinct radius.
double distance_exponent(std::span<const GrowthRow> rows, FitWindow window = {});

struct HistogramRow {
    std::uint64_t size;
    std::uint64_t bins;
    friend bool operator==(const HistogramRow&, const HistogramRow&) = default;
};

// Bins per bin size over all |groups|^m codes, including the size-0 row.
std::vector<HistogramRow> bin_histogram(const FragmentIndex& index);

struct RatioRow {
    std::size_t k;
    double ratio_mean;
    double ratio_max;
};

struct RatioProbe {
    std::size_t k;
    std::size_t qm_ball;      // |{x : qm(w, x) <= r_qm}|
    std::size_t metric_ball;  // |{x : metric(w, x) <= r_m}|
    double ratio() const { return double(metric_ball) / double(qm_ball); }
};

// Sizes of the quasi-metric ball holding the k nearest neighbours of w and
// of the smallest metric ball about w holding those same points. Throws
// DomainError if metric < qm on any pair inside the quasi-metric ball.
template <typename Point, typename QDist, typename MDist>
RatioProbe qm_metric_ratio_probe(const std::vector<Point>& points, QDist&& qm, MDist&& metric, const Point& w,
                                 std::size_t k)
{
    if (k == 0 || k > points.size())
        throw ArgumentError("k must be between 1 and the number of points");
    std::vector<std::pair<double, std::size_t>> qd(points.size());
    for (std::size_t i = 0; i < points.size(); ++i)
        qd[i] = {double(qm(w, points[i])), i};
    std::nth_element(qd.begin(), qd.begin() + std::ptrdiff_t(k - 1), qd.end());
    const double r_qm = qd[k - 1].first;
    double r_m = 0;
    std::size_t s_qm = 0;
    for (std::size_t i = 0; i < points.size(); ++i) {
        const double dq = double(qm(w, points[i]));
        if (dq <= r_qm) {
            ++s_qm;
            const double dm = double(metric(w, points[i]));
            if (dm < dq)
                throw DomainError("the metric does not majorize the quasi-metric on a sampled pair");
            r_m = std::max(r_m, dm);
        }
    }
    std::size_t s_m = 0;
    for (const auto& x : points)
        if (double(metric(w, x)) <= r_m)
            ++s_m;
    return {k, s_qm, s_m};
}

template <typename Point, typename QDist, typename MDist>
std::vector<RatioRow> qm_metric_ratio(const std::vector<Point>& points, QDist&& qm, MDist&& metric,
                                      std::span<const std::size_t> ks, const std::vector<Point>& probes)
{
    if (probes.empty())
        throw ArgumentError("qm_metric_ratio needs at least one probe");
    std::vector<RatioRow> rows;
    for (std::size_t k : ks) {
        double sum = 0, worst = 0;
        for (const auto& w : probes) {
            const double r = qm_metric_ratio_probe(points, qm, metric, w, k).ratio();
            sum += r;
            worst = std::max(worst, r);
        }
        rows.push_back({k, sum / double(probes.size()), worst});
    }
    return rows;
}

// Independent per-position symbol distribution over an alphabet.
class ProductSampler {
public:
    explicit ProductSampler(const Alphabet& alphabet);  // uniform
    ProductSampler(const Alphabet& alphabet, std::span<const double> weights);

    // `symbol probability` lines; symbols absent from the file get weight 0.
    static ProductSampler parse(std::istream& in, const Alphabet& alphabet);
    static ProductSampler load(const std::filesystem::path& path, const Alphabet& alphabet);

    std::vector<std::uint8_t> sample(std::size_t m, std::mt19937_64& rng) const;
    std::string sample_string(std::size_t m, std::mt19937_64& rng) const;
    const Alphabet& alphabet() const noexcept { return alphabet_; }

private:
    Alphabet alphabet_;
    std::vector<double> weights_;
};

struct ValueCount {
    int value;
    std::uint64_t count;
    friend bool operator==(const ValueCount&, const ValueCount&) = default;
};

enum class CertAnchor { point, bin };

// Histogram of d~(w, anchor) (point anchor) or cylinder_lb(w, bin of
// anchor) (bin anchor) over `samples` random w drawn from `sampler`.
std::vector<ValueCount> cert_value_distribution(const FragmentIndex& index, std::string_view anchor, CertAnchor kind,
                                                std::size_t samples, const ProductSampler& sampler,
                                                std::uint64_t seed);

// CSV writers; each emits a header row.
void write_growth_csv(std::ostream& out, std::span<const GrowthRow> rows);
void write_ratio_csv(std::ostream& out, std::span<const RatioRow> rows);
void write_histogram_csv(std::ostream& out, std::span<const HistogramRow> rows);
void write_concentration_csv(std::ostream& out, const ConcentrationEstimate& est);
void write_value_csv(std::ostream& out, std::span<const ValueCount> rows);

} // namespace qmidx

#endif // QMIDX_ANALYSIS_HPP
