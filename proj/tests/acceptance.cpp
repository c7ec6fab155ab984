// Acceptance run: one PASS/FAIL line per criterion. Brute-force references
// come from tests/oracles.hpp and never call the library's search code.
#include <array>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <functional>
#include <iostream>
#include <map>
#include <memory>
#include <numeric>
#include <random>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include "oracles.hpp"
#include "qmidx/analysis.hpp"
#include "qmidx/certification.hpp"
#include "qmidx/fragment_reduction.hpp"
#include "qmidx/ingest.hpp"
#include "qmidx/reduce.hpp"

using namespace qmidx;

namespace {

using Clock = std::chrono::steady_clock;
using Query = RangeQuery<std::string, int>;

struct Outcome {
    bool pass = true;
    std::string detail;
};

// Direct-indexed symbol distance built from the raw score file.
struct FlatQm {
    std::array<std::array<int, 128>, 128> d{};
    FlatQm()
    {
        for (char a : oracle::kAminoAcids)
            for (char b : oracle::kAminoAcids)
                d[std::size_t(a)][std::size_t(b)] = oracle::qd(a, b);
    }
    int operator()(const std::string& x, const std::string& y) const
    {
        int s = 0;
        for (std::size_t i = 0; i < x.size(); ++i)
            s += d[std::size_t(x[i])][std::size_t(y[i])];
        return s;
    }
};

const FlatQm& flat()
{
    static const FlatQm f;
    return f;
}

const SymbolQuasiMetric& library_qm()
{
    static const auto qm = derive_symbol_quasimetric(load_scoring_matrix(oracle::data_path("blosum62.txt")));
    return qm;
}

FragmentIndex index_of(const std::vector<std::string>& xs)
{
    return build_index(std::span<const std::string>(xs), default_partition(), library_qm());
}

std::vector<std::string> probes(std::size_t n, std::uint64_t seed)
{
    std::mt19937_64 rng(seed);
    std::vector<std::string> out;
    for (std::size_t i = 0; i < n; ++i)
        out.push_back(oracle::random_fragment(rng, 10));
    return out;
}

// ---- 1 --------------------------------------------------------------------

Outcome criterion1()
{
    const auto qm = derive_symbol_quasimetric(load_scoring_matrix(oracle::data_path("blosum62.txt")));
    std::size_t triples = 0, bad = 0;
    const std::size_t n = qm.alphabet().size();
    for (std::size_t a = 0; a < n; ++a)
        for (std::size_t b = 0; b < n; ++b) {
            if ((a == b) != (qm.table()(a, b) == 0) || qm.table()(a, b) < 0)
                ++bad;
            for (std::size_t c = 0; c < n; ++c) {
                ++triples;
                bad += qm.table()(a, c) > qm.table()(a, b) + qm.table()(b, c);
            }
        }
    const int ts = qm.distance('T', 'S'), st = qm.distance('S', 'T');
    std::ostringstream s;
    s << triples << " triples, " << bad << " axiom failures, d(T,S)=" << ts << " d(S,T)=" << st;
    return {triples == 8000 && bad == 0 && ts == 4 && st == 3, s.str()};
}

// ---- 2 --------------------------------------------------------------------

Outcome criterion2()
{
    const std::vector<std::pair<std::string, std::vector<std::string>>> corpora{
        {"uniform", oracle::uniform_corpus(10000, 10, 101)},
        {"biased", oracle::biased_corpus(10000, 10, 102)},
        {"clustered", oracle::clustered_corpus(10000, 10, 20, 103)},
    };
    const int radii[] = {5, 10, 25, 40};
    const std::size_t ks[] = {1, 10, 100};
    std::size_t range_checks = 0, knn_checks = 0, mismatches = 0;
    for (const auto& [name, xs] : corpora) {
        const auto idx = index_of(xs);
        const std::set<std::string> uniq(xs.begin(), xs.end());
        const std::vector<std::string> distinct(uniq.begin(), uniq.end());
        for (const auto& w : probes(200, 104 + range_checks)) {
            std::vector<int> dist(distinct.size());
            for (std::size_t i = 0; i < distinct.size(); ++i)
                dist[i] = flat()(w, distinct[i]);
            for (int eps : radii) {
                std::set<std::string> want;
                for (std::size_t i = 0; i < distinct.size(); ++i)
                    if (dist[i] <= eps)
                        want.insert(distinct[i]);
                std::set<std::string> got;
                for (const auto& m : range_search(idx, w, eps).matches)
                    got.insert(idx.fragment(m.index));
                mismatches += got != want;
                ++range_checks;
            }
            auto sorted = dist;
            std::sort(sorted.begin(), sorted.end());
            for (std::size_t k : ks) {
                std::vector<int> got;
                for (const auto& m : knn(idx, w, k).matches)
                    got.push_back(m.distance);
                std::sort(got.begin(), got.end());
                mismatches += got != std::vector<int>(sorted.begin(), sorted.begin() + std::ptrdiff_t(k));
                ++knn_checks;
            }
        }
    }
    std::ostringstream s;
    s << range_checks << " range and " << knn_checks << " k-NN comparisons over 3 corpora, " << mismatches
      << " mismatches";
    return {mismatches == 0 && range_checks == 2400 && knn_checks == 1800, s.str()};
}

// ---- 3 --------------------------------------------------------------------

Outcome criterion3()
{
    const DistanceOracle<std::string, int> qm{[](const std::string& a, const std::string& b) { return flat()(a, b); },
                                              false};
    static const auto mx = associated_metric(library_qm(), MetricMode::max);
    const DistanceOracle<std::string, int> metric{
        [](const std::string& a, const std::string& b) { return string_dist(a, b, mx); }, true};
    const Workload<std::string> w("random 10-mers", oracle::uniform_corpus(500, 10, 201));
    std::vector<Query> qs;
    std::mt19937_64 rng(202);
    const int radii[] = {5, 10, 25, 40};
    for (int i = 0; i < 100; ++i)
        qs.push_back({oracle::random_fragment(rng, 10), radii[i % 4]});
    std::vector<Query> ms;
    const int mradii[] = {10, 30, 50, 70};
    for (int i = 0; i < 100; ++i)
        ms.push_back({oracle::random_fragment(rng, 10), mradii[i % 4]});

    TreeOptions opts;
    opts.leaf_capacity = 16;
    std::ostringstream s;
    bool ok = true;
    {
        const auto scheme = build_metric_tree(w, CertFamily::qm_mtree, qm, opts);
        const bool c = bool(check_consistency(scheme, qs, ball_membership(qm)));
        ok = ok && c;
        s << "qm_mtree " << (c ? "consistent" : "MISS");
    }
    for (CertFamily f : {CertFamily::mtree, CertFamily::vp, CertFamily::gnat}) {
        const auto scheme = build_metric_tree(w, f, metric, opts);
        const bool c = bool(check_consistency(scheme, ms, ball_membership(metric)));
        ok = ok && c;
        s << ", " << to_string(f) << ' ' << (c ? "consistent" : "MISS");
    }
    s << " (500 points, 100 probes each)";
    return {ok, s.str()};
}

// ---- 4 --------------------------------------------------------------------

Outcome criterion4()
{
    std::mt19937_64 rng(301);
    std::size_t spaces = 0, cases = 0, violations = 0;
    for (int t = 0; t < 30; ++t) {
        const std::size_t n = 8 + std::size_t(t % 9);
        // Distinct random points of a small grid under L1.
        std::uniform_int_distribution<int> coord(0, 3);
        std::set<std::array<int, 3>> seen;
        std::vector<std::array<int, 3>> pts;
        while (pts.size() < n) {
            std::array<int, 3> p{coord(rng), coord(rng), coord(rng)};
            if (seen.insert(p).second)
                pts.push_back(p);
        }
        const auto space = EmpiricalMMSpace::from_points(pts, [](const auto& a, const auto& b) {
            return std::abs(a[0] - b[0]) + std::abs(a[1] - b[1]) + std::abs(a[2] - b[2]);
        });
        const auto grid = distance_grid(space);
        const auto est = concentration_exact(space, grid);
        std::vector<std::vector<double>> d(n, std::vector<double>(n));
        for (std::size_t i = 0; i < n; ++i)
            for (std::size_t j = 0; j < n; ++j)
                d[i][j] = space.distance(i, j);
        ++spaces;

        for (int cover = 0; cover < 3; ++cover) {
            std::vector<std::size_t> perm(n);
            std::iota(perm.begin(), perm.end(), std::size_t(0));
            std::shuffle(perm.begin(), perm.end(), rng);
            const std::size_t cap = std::max<std::size_t>(1, n / 4 - std::size_t(cover % 2));
            std::vector<std::vector<std::size_t>> blocks;
            for (std::size_t i = 0; i < n; i += cap)
                blocks.emplace_back(perm.begin() + std::ptrdiff_t(i),
                                    perm.begin() + std::ptrdiff_t(std::min(n, i + cap)));
            double max_block = 0;
            for (const auto& b : blocks)
                max_block = std::max(max_block, double(b.size()) / double(n));
            if (max_block > 0.25)
                continue;
            std::vector<double> eps_values = grid;
            for (std::size_t i = 0; i + 1 < grid.size(); ++i)
                eps_values.push_back((grid[i] + grid[i + 1]) / 2);
            eps_values.push_back(grid.back() + 1);
            for (double xi : {max_block, (max_block + 0.25) / 2, 0.25}) {
                const double delta = alpha_inverse(est, xi);
                for (double eps : eps_values) {
                    if (!(eps > delta))
                        continue;
                    const auto bound = rngconc_bounds(xi, eps, est);
                    const auto met = oracle::blocks_met(d, blocks, eps);
                    double avg = 0;
                    for (std::size_t w = 0; w < n; ++w)
                        avg += space.weight(w) * double(met[w]);
                    const auto worst = *std::max_element(met.begin(), met.end());
                    violations += avg < double(bound.average) - 1e-9;
                    violations += worst < bound.worst;
                    ++cases;
                }
            }
        }
    }
    std::ostringstream s;
    s << spaces << " spaces, " << cases << " (xi, eps) cases, " << violations << " violations";
    return {spaces >= 5 && cases > 0 && violations == 0, s.str()};
}

// ---- 5 --------------------------------------------------------------------

Outcome criterion5()
{
    auto xs = std::make_shared<const std::vector<std::string>>(oracle::uniform_corpus(10000, 10, 401));
    auto idx = std::make_shared<const FragmentIndex>(index_of(*xs));
    const auto member = fragment_membership(library_qm());
    const auto mx = associated_metric(library_qm(), MetricMode::max);
    const int radii[] = {5, 10, 25, 40};
    const auto ws = probes(500, 402);

    std::size_t frag_nonempty = 0, frag_bad = 0;
    {
        const auto red = fragment_reduction(idx);
        const auto method = bin_enumerator(idx);
        for (std::size_t i = 0; i < ws.size(); ++i) {
            const auto b = access_overhead(red, method, Query{ws[i], radii[i % 4]}, member);
            if (b.empty_answer())
                continue;
            ++frag_nonempty;
            frag_bad += !(b.beta >= 1.0);
        }
    }

    std::size_t maj_nonempty = 0, maj_bad = 0;
    {
        const auto scale = majorant_scale(library_qm(), mx);
        const auto red = majorant_reduction<std::string, int>(xs, [scale](int e) { return scale.widen(e); });
        const auto method = linear_scan_method<std::string, Query>(
            xs, [&mx](const Query& q, const std::string& x) -> std::optional<int> {
                const int d = string_dist(q.center, x, mx);
                return d <= q.radius ? std::optional<int>(d) : std::nullopt;
            });
        for (std::size_t i = 0; i < ws.size(); ++i) {
            const Query q{ws[i], radii[i % 4] + 10};
            const auto a = answer_by_projection(red, method, q, member);
            // The reduction must also be exact.
            std::size_t want = 0;
            for (const auto& x : *xs)
                want += flat()(q.center, x) <= q.radius;
            maj_bad += a.matches.size() != want;
            const auto b = make_overhead(a.candidates, a.matches.size());
            if (b.empty_answer())
                continue;
            ++maj_nonempty;
            maj_bad += !(b.beta >= 1.0);
        }
    }

    std::size_t ratio_bad = 0;
    {
        const auto& qt = library_qm().table();
        const auto& mt = mx.table();
        std::vector<std::vector<std::uint8_t>> pts;
        for (const auto& x : *xs)
            pts.push_back(library_qm().alphabet().encode(x));
        const std::size_t ks[] = {1, 10, 100};
        for (std::size_t i = 0; i < ws.size(); ++i) {
            const auto p = qm_metric_ratio_probe(
                pts, [&](const auto& a, const auto& b) { return ordinal_distance(qt, a, b); },
                [&](const auto& a, const auto& b) { return ordinal_distance(mt, a, b); },
                library_qm().alphabet().encode(ws[i]), ks[i % 3]);
            ratio_bad += !(p.ratio() >= 1.0);
        }
    }
    std::ostringstream s;
    s << "fragment beta<1 on " << frag_bad << "/" << frag_nonempty << " nonempty probes; majorant failures "
      << maj_bad << " (" << maj_nonempty << " nonempty); ratio<1 on " << ratio_bad << "/500";
    return {frag_bad == 0 && maj_bad == 0 && ratio_bad == 0 && frag_nonempty > 0 && maj_nonempty > 0, s.str()};
}

// ---- 6 --------------------------------------------------------------------

std::shared_ptr<FragmentIndex> proteome()
{
    static std::shared_ptr<FragmentIndex> idx;
    if (!idx) {
        const auto records = load_fasta(oracle::data_path("proteome_100k.faa"));
        const auto frags = extract_fragments(records, 10, library_qm().alphabet());
        idx = std::make_shared<FragmentIndex>(build_index(frags, default_partition(), library_qm()));
    }
    return idx;
}

Outcome criterion6()
{
    const auto idx = proteome();
    const ProductSampler sampler(idx->alphabet());
    std::mt19937_64 rng(601);
    std::vector<std::vector<std::uint8_t>> ws;
    for (int i = 0; i < 200; ++i)
        ws.push_back(sampler.sample(10, rng));
    const std::size_t ks[] = {1, 10, 100};
    std::vector<GrowthRow> curve;
    std::ostringstream s;
    s << idx->size() << " unique fragments; mean/max fraction scanned:";
    for (std::size_t k : ks) {
        double sum = 0, worst = 0;
        for (const auto& w : ws) {
            const double f = double(knn(*idx, w, k).stats.points_scanned) / double(idx->size());
            sum += f;
            worst = std::max(worst, f);
        }
        curve.push_back({double(k), sum / double(ws.size())});
        s << " k=" << k << ' ' << 100 * curve.back().fraction << "%/" << 100 * worst << '%';
    }
    const double slope = distance_exponent(curve);
    s << "; log-log slope " << slope << " (reference 0.5, informational)";
    const bool monotone = curve[0].fraction <= curve[1].fraction && curve[1].fraction <= curve[2].fraction;
    return {idx->size() >= 100000 && curve[2].fraction < 0.20 && monotone, s.str()};
}

// ---- 7 --------------------------------------------------------------------

Outcome criterion7()
{
    const auto idx = proteome();
    const auto dir = std::filesystem::temp_directory_path();
    const auto p1 = dir / "qmidx_acceptance_1.qmix", p2 = dir / "qmidx_acceptance_2.qmix";
    save_index(*idx, p1);
    const auto loaded = load_index(p1);
    save_index(loaded, p2);
    auto slurp = [](const std::filesystem::path& p) {
        std::ifstream in(p, std::ios::binary);
        return std::string(std::istreambuf_iterator<char>(in), {});
    };
    const bool identical = slurp(p1) == slurp(p2);
    std::size_t differ = 0;
    std::mt19937_64 rng(701);
    std::uniform_int_distribution<int> radius(0, 40);
    for (const auto& w : probes(100, 702)) {
        const int eps = radius(rng);
        differ += range_search(loaded, w, eps).matches != range_search(*idx, w, eps).matches;
        differ += knn(loaded, w, 10).matches != knn(*idx, w, 10).matches;
    }
    std::filesystem::remove(p1);
    std::filesystem::remove(p2);
    std::ostringstream s;
    s << "archive bytes " << (identical ? "identical" : "DIFFER") << " after save/load/save; " << differ
      << " differing answers over 100 probes";
    return {identical && differ == 0, s.str()};
}

// ---- 8 --------------------------------------------------------------------

Outcome criterion8()
{
    std::ostringstream s;
    bool ok = true;

    // Bin histogram: three-fragment toy and a small random corpus.
    {
        const std::vector<std::string> toy{"TT", "II", "KK"};
        const auto h = bin_histogram(index_of(toy));
        std::map<std::uint64_t, std::uint64_t> got;
        for (const auto& r : h)
            got[r.size] = r.bins;
        const auto corpus = oracle::clustered_corpus(3000, 6, 10, 801);
        std::map<std::uint64_t, std::uint64_t> got2;
        for (const auto& r : bin_histogram(index_of(corpus)))
            got2[r.size] = r.bins;
        const bool hb = got == oracle::bin_histogram(toy, 2) && got2 == oracle::bin_histogram(corpus, 6);
        ok = ok && hb;
        s << "bin_histogram " << (hb ? "ok" : "MISMATCH");
    }
    // Ball growth against a double loop.
    {
        const auto xs = oracle::uniform_corpus(256, 10, 802);
        const std::vector<std::string> centers(xs.begin(), xs.begin() + 16);
        std::vector<double> radii;
        for (int r = 0; r <= 120; r += 5)
            radii.push_back(r);
        const auto rows = ball_growth(xs, flat(), centers, radii);
        bool gb = rows.size() == radii.size();
        for (std::size_t i = 0; gb && i < rows.size(); ++i) {
            std::size_t within = 0;
            for (const auto& c : centers)
                for (const auto& x : xs)
                    within += oracle::qdist(c, x) <= radii[i];
            // 16 centres and 256 points keep every partial sum dyadic, so
            // the comparison can be exact.
            gb = rows[i].fraction == double(within) / (16.0 * 256.0);
        }
        ok = ok && gb;
        s << ", ball_growth " << (gb ? "ok" : "MISMATCH");
    }
    // Exact concentration on dyadic-weight spaces.
    {
        bool cb = true;
        std::mt19937_64 rng(803);
        std::uniform_int_distribution<int> coord(0, 5);
        for (int t = 0; t < 6 && cb; ++t) {
            std::vector<std::array<int, 2>> pts;
            std::set<std::array<int, 2>> seen;
            while (pts.size() < 8) {
                std::array<int, 2> p{coord(rng), coord(rng)};
                if (seen.insert(p).second)
                    pts.push_back(p);
            }
            const auto space = EmpiricalMMSpace::from_points(
                pts, [](const auto& a, const auto& b) { return std::abs(a[0] - b[0]) + std::abs(a[1] - b[1]); });
            const auto grid = distance_grid(space);
            const auto est = concentration_exact(space, grid);
            std::vector<std::vector<double>> d(8, std::vector<double>(8));
            for (std::size_t i = 0; i < 8; ++i)
                for (std::size_t j = 0; j < 8; ++j)
                    d[i][j] = space.distance(i, j);
            const std::vector<double> mu(8, 0.125);
            for (std::size_t i = 0; i < grid.size(); ++i)
                cb = cb && est.alpha_hat[i] == oracle::alpha(d, mu, grid[i]);
        }
        ok = ok && cb;
        s << ", concentration_exact " << (cb ? "ok" : "MISMATCH");
    }
    // Exponent on k = r^2.
    {
        std::vector<GrowthRow> rows;
        for (int r = 1; r <= 20; ++r)
            rows.push_back({double(r), double(r * r)});
        const double e = distance_exponent(rows);
        const bool eb = std::abs(e - 2.0) < 1e-9;
        ok = ok && eb;
        s << ", exponent " << e;
    }
    return {ok, s.str()};
}

} // namespace

int main()
{
    const std::vector<std::pair<int, std::function<Outcome()>>> criteria{
        {1, criterion1}, {2, criterion2}, {3, criterion3}, {4, criterion4},
        {5, criterion5}, {6, criterion6}, {7, criterion7}, {8, criterion8},
    };
    // Runtime ceilings in seconds; 0 means none is set.
    const double limits[] = {0, 1, 120, 0, 60, 0, 300, 0, 0};
    int failures = 0;
    for (const auto& [n, fn] : criteria) {
        const auto start = Clock::now();
        Outcome o;
        try {
            o = fn();
        } catch (const std::exception& e) {
            o = {false, std::string("exception: ") + e.what()};
        }
        const double secs = std::chrono::duration<double>(Clock::now() - start).count();
        if (limits[n] > 0 && secs >= limits[n]) {
            o.pass = false;
            o.detail += "; over the " + std::to_string(int(limits[n])) + " s limit";
        }
        failures += !o.pass;
        std::printf("criterion %d: %s  %s [%.2f s]\n", n, o.pass ? "PASS" : "FAIL", o.detail.c_str(), secs);
        std::fflush(stdout);
    }
    return failures == 0 ? 0 : 1;
}
