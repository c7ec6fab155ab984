#include "cli.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <iomanip>
#include <memory>
#include <numeric>
#include <optional>
#include <ostream>
#include <random>
#include <sstream>

#include <CLI11.hpp>

#include "qmidx/analysis.hpp"
#include "qmidx/fragment_reduction.hpp"
#include "qmidx/ingest.hpp"

namespace qmidx::cli {

namespace {

using Ordinals = std::vector<std::uint8_t>;

// CSV sink: the --csv file when given, else `out`. Informational lines go
// wherever the CSV does not.
class Sinks {
public:
    Sinks(const std::string& csv_path, std::ostream& out, std::ostream& err) : out_(out), err_(err)
    {
        if (!csv_path.empty()) {
            file_.open(csv_path, std::ios::binary | std::ios::trunc);
            if (!file_)
                throw Error("cannot write " + csv_path);
        }
        csv().precision(10);
    }

    std::ostream& csv() { return file_.is_open() ? static_cast<std::ostream&>(file_) : out_; }
    std::ostream& info() { return file_.is_open() ? out_ : err_; }

private:
    std::ofstream file_;
    std::ostream& out_;
    std::ostream& err_;
};

std::vector<Ordinals> all_points(const FragmentIndex& index)
{
    std::vector<Ordinals> pts;
    pts.reserve(index.size());
    for (std::size_t i = 0; i < index.size(); ++i) {
        const auto o = index.ordinals(i);
        pts.emplace_back(o.begin(), o.end());
    }
    return pts;
}

ProductSampler make_sampler(const FragmentIndex& index, const std::string& freq)
{
    return freq.empty() ? ProductSampler(index.alphabet()) : ProductSampler::load(freq, index.alphabet());
}

std::vector<Ordinals> sample_probes(const FragmentIndex& index, const ProductSampler& sampler, std::size_t n,
                                    std::uint64_t seed)
{
    std::mt19937_64 rng(seed);
    std::vector<Ordinals> probes;
    for (std::size_t i = 0; i < n; ++i)
        probes.push_back(sampler.sample(index.m(), rng));
    return probes;
}

MetricMode parse_mode(const std::string& s)
{
    return s == "sum" ? MetricMode::sum : MetricMode::max;
}

// "a:b:s" (inclusive) or a comma list.
std::vector<double> parse_radii(const std::string& spec)
{
    std::vector<double> r;
    if (spec.find(':') != std::string::npos) {
        std::istringstream in(spec);
        double a = 0, b = 0, s = 0;
        char c1 = 0, c2 = 0;
        if (!(in >> a >> c1 >> b >> c2 >> s) || c1 != ':' || c2 != ':' || !(s > 0) || b < a)
            throw ArgumentError("radius range must be start:stop:step with step > 0");
        for (double x = a; x <= b + 1e-9; x += s)
            r.push_back(x);
        return r;
    }
    std::istringstream in(spec);
    std::string tok;
    while (std::getline(in, tok, ',')) {
        try {
            r.push_back(std::stod(tok));
        } catch (const std::exception&) {
            throw ArgumentError("invalid radius '" + tok + "'");
        }
    }
    if (r.empty() || !std::is_sorted(r.begin(), r.end()))
        throw ArgumentError("radii must be a nonempty increasing list");
    return r;
}

// ---- build ---------------------------------------------------------------

struct BuildArgs {
    std::string fasta, matrix, partition = "default", out;
    std::size_t m = 10;
};

int cmd_build(const BuildArgs& a, std::ostream& out)
{
    const auto qm = derive_symbol_quasimetric(load_scoring_matrix(a.matrix));
    const Partition partition =
        a.partition == "default" ? default_partition(qm.alphabet()) : Partition::load(a.partition, qm.alphabet());

    std::ifstream in(a.fasta);
    if (!in)
        throw Error("cannot open " + a.fasta);
    std::stringstream text;
    text << in.rdbuf();
    if (text.str().find_first_not_of(" \t\r\n") == std::string::npos)
        throw Error("no fragments: " + a.fasta + " is empty");
    const auto records = parse_fasta(text);
    const auto fragments = extract_fragments(records, a.m, qm.alphabet());
    if (fragments.empty())
        throw Error("no fragments of length " + std::to_string(a.m) + " in " + a.fasta);

    const auto index = build_index(fragments, partition, qm);
    save_index(index, a.out);
    out << "records: " << records.size() << '\n'
        << "fragments: " << index.size() << " unique, " << index.total_occurrences() << " total\n"
        << "bins: " << index.directory().size() << " nonempty, " << index.bin_count() - index.directory().size()
        << " empty, " << index.bin_count() << " total\n"
        << "wrote " << a.out << '\n';
    return kExitOk;
}

// ---- query ---------------------------------------------------------------

struct QueryArgs {
    std::string index, seq;
    std::optional<int> radius;
    std::optional<std::size_t> k;
};

int cmd_query(const QueryArgs& a, std::ostream& out, std::ostream& err)
{
    if (!a.radius && !a.k)
        throw CLI::ValidationError("query", "one of --radius or --k is required");
    const auto index = load_index(a.index);
    SearchResult<int> r;
    if (a.radius) {
        if (*a.radius < 0)
            throw CLI::ValidationError("--radius", "must be nonnegative");
        r = range_search(index, a.seq, *a.radius);
        // Range answers come in (code, lex) order; list by distance first.
        std::stable_sort(r.matches.begin(), r.matches.end(),
                         [](const auto& x, const auto& y) { return x.distance < y.distance; });
    } else {
        if (*a.k > index.size())
            err << "warning: k = " << *a.k << " exceeds the corpus size " << index.size()
                << "; returning every fragment\n";
        r = knn(index, a.seq, *a.k);
    }
    for (const auto& m : r.matches)
        out << index.fragment(m.index) << ' ' << m.distance << '\n';
    out << "# matches " << r.matches.size() << ", bins opened " << r.stats.blocks_opened << ", points scanned "
        << r.stats.points_scanned << ", fraction scanned " << std::setprecision(6)
        << double(r.stats.points_scanned) / double(index.size()) << " of " << index.size() << '\n';
    return kExitOk;
}

// ---- bench ---------------------------------------------------------------

struct BenchArgs {
    std::string index, freq, csv;
    std::vector<std::size_t> ks{1, 10, 100};
    std::size_t probes = 100;
    std::uint64_t seed = 0;
};

int cmd_bench(const BenchArgs& a, std::ostream& out, std::ostream& err)
{
    const auto index = load_index(a.index);
    const auto probes = sample_probes(index, make_sampler(index, a.freq), a.probes, a.seed);
    Sinks sinks(a.csv, out, err);
    auto& csv = sinks.csv();
    csv << "k,mean_fraction_scanned,max_fraction_scanned,mean_bins_opened,max_bins_opened\n";
    std::vector<GrowthRow> curve;
    for (std::size_t k : a.ks) {
        double frac_sum = 0, frac_max = 0, bins_sum = 0, bins_max = 0;
        for (const auto& w : probes) {
            const auto r = knn(index, w, k);
            const double f = double(r.stats.points_scanned) / double(index.size());
            frac_sum += f;
            frac_max = std::max(frac_max, f);
            bins_sum += double(r.stats.blocks_opened);
            bins_max = std::max(bins_max, double(r.stats.blocks_opened));
        }
        const double n = double(probes.size());
        csv << k << ',' << frac_sum / n << ',' << frac_max << ',' << bins_sum / n << ',' << bins_max << '\n';
        curve.push_back({double(k), frac_sum / n});
    }
    try {
        sinks.info() << "log-log slope of mean fraction scanned against k: " << std::setprecision(4)
                     << distance_exponent(curve) << " (power-law reference 0.5)\n";
    } catch (const DomainError&) {
        sinks.info() << "log-log slope needs at least two distinct k\n";
    }
    return kExitOk;
}

// ---- stats ---------------------------------------------------------------

struct StatsArgs {
    std::string index, freq, csv, metric = "max";
    std::uint64_t seed = 0;
    std::size_t probes = 20;
    // balls
    std::string radii = "0:120:5", mode = "dataset";
    std::size_t centers = 100;
    // ratio
    std::vector<std::size_t> ks{1, 10, 100};
    // concentration
    std::size_t points = 16, anchors = 0;
    bool exact = false;
    // overhead
    std::string reduction = "fragment";
    std::optional<int> radius;
    std::optional<std::size_t> k;
    // certdist
    std::string anchor;
    bool bin = false;
    std::size_t samples = 40000;
};

int stats_bins(const StatsArgs& a, std::ostream& out, std::ostream& err)
{
    const auto index = load_index(a.index);
    Sinks sinks(a.csv, out, err);
    write_histogram_csv(sinks.csv(), bin_histogram(index));
    sinks.info() << "bins: " << index.directory().size() << " nonempty, "
                 << index.bin_count() - index.directory().size() << " empty, " << index.bin_count() << " total\n";
    return kExitOk;
}

int stats_balls(const StatsArgs& a, std::ostream& out, std::ostream& err)
{
    const auto index = load_index(a.index);
    const auto radii = parse_radii(a.radii);
    std::vector<GrowthRow> rows;
    if (a.mode == "dataset") {
        const auto pts = all_points(index);
        std::mt19937_64 rng(a.seed);
        std::uniform_int_distribution<std::size_t> pick(0, pts.size() - 1);
        std::vector<Ordinals> centers;
        for (std::size_t i = 0; i < a.centers; ++i)
            centers.push_back(pts[pick(rng)]);
        const auto& t = index.quasimetric().table();
        rows = ball_growth(pts, [&](const Ordinals& x, const Ordinals& y) { return ordinal_distance(t, x, y); },
                           centers, radii);
    } else {
        std::vector<int> nearest;
        for (const auto& w : sample_probes(index, make_sampler(index, a.freq), a.centers, a.seed))
            nearest.push_back(knn(index, w, 1).matches.at(0).distance);
        rows = neighbourhood_growth(nearest, radii);
    }
    Sinks sinks(a.csv, out, err);
    write_growth_csv(sinks.csv(), rows);
    std::vector<GrowthRow> fit;
    for (const auto& r : rows)
        if (r.fraction < 1.0)
            fit.push_back(r);
    try {
        sinks.info() << "distance exponent (log-log slope below saturation): " << std::setprecision(4)
                     << distance_exponent(fit) << '\n';
    } catch (const DomainError&) {
        sinks.info() << "distance exponent: not enough rows to fit\n";
    }
    return kExitOk;
}

int stats_ratio(const StatsArgs& a, std::ostream& out, std::ostream& err)
{
    const auto index = load_index(a.index);
    const auto pts = all_points(index);
    const auto probes = sample_probes(index, make_sampler(index, a.freq), a.probes, a.seed);
    const auto metric = associated_metric(index.quasimetric(), parse_mode(a.metric));
    const auto& qt = index.quasimetric().table();
    const auto& mt = metric.table();
    for (std::size_t k : a.ks)
        if (k == 0 || k > pts.size())
            throw ArgumentError("k must be between 1 and the number of fragments (" + std::to_string(pts.size()) +
                                ")");
    const auto rows = qm_metric_ratio(
        pts, [&](const Ordinals& x, const Ordinals& y) { return ordinal_distance(qt, x, y); },
        [&](const Ordinals& x, const Ordinals& y) { return ordinal_distance(mt, x, y); }, a.ks, probes);
    Sinks sinks(a.csv, out, err);
    write_ratio_csv(sinks.csv(), rows);
    sinks.info() << "metric ball over quasi-metric ball, " << probes.size() << " probes, metric mode " << a.metric
                 << '\n';
    return kExitOk;
}

int stats_concentration(const StatsArgs& a, std::ostream& out, std::ostream& err)
{
    const auto index = load_index(a.index);
    if (a.points == 0 || a.points > index.size())
        throw ArgumentError("--points must be between 1 and the number of fragments");
    std::vector<std::size_t> all(index.size());
    std::iota(all.begin(), all.end(), std::size_t(0));
    std::vector<std::size_t> chosen;
    std::mt19937_64 rng(a.seed);
    std::sample(all.begin(), all.end(), std::back_inserter(chosen), a.points, rng);
    const auto metric = associated_metric(index.quasimetric(), parse_mode(a.metric));
    const auto space = EmpiricalMMSpace::from_points(chosen, [&](std::size_t x, std::size_t y) {
        return ordinal_distance(metric.table(), index.ordinals(x), index.ordinals(y));
    });
    const auto grid = distance_grid(space);
    ConcentrationEstimate est;
    if (a.exact) {
        est = concentration_exact(space, grid);
    } else {
        std::vector<std::size_t> anchors(a.anchors == 0 ? space.size() : std::min(a.anchors, space.size()));
        std::iota(anchors.begin(), anchors.end(), std::size_t(0));
        est = concentration_anchor(space, grid, anchors);
    }
    Sinks sinks(a.csv, out, err);
    write_concentration_csv(sinks.csv(), est);
    sinks.info() << "concentration over " << space.size() << " sampled fragments, " << a.metric << " metric, "
                 << (a.exact ? "exact" : "anchor lower bound") << "; alpha(0+) = " << est.alpha_0plus << '\n';
    return kExitOk;
}

int stats_overhead(const StatsArgs& a, std::ostream& out, std::ostream& err)
{
    if (a.radius.has_value() == a.k.has_value())
        throw CLI::ValidationError("overhead", "exactly one of --radius or --k is required");
    if (a.radius && *a.radius < 0)
        throw CLI::ValidationError("--radius", "must be nonnegative");
    auto index = std::make_shared<const FragmentIndex>(load_index(a.index));
    const auto probes = sample_probes(*index, make_sampler(*index, a.freq), a.probes, a.seed);
    const auto metric = associated_metric(index->quasimetric(), parse_mode(a.metric));
    const auto& qm = index->quasimetric();

    std::vector<AccessOverhead> rows;
    if (a.reduction == "fragment") {
        if (a.radius) {
            const auto red = fragment_reduction(index);
            const auto method = bin_enumerator(index);
            const auto member = fragment_membership(qm);
            for (const auto& w : probes)
                rows.push_back(access_overhead(red, method, FragmentQuery{index->alphabet().decode(w), *a.radius},
                                               member));
        } else {
            for (const auto& w : probes) {
                const auto r = knn(*index, w, *a.k);
                rows.push_back(make_overhead(r.stats.points_scanned, r.matches.size()));
            }
        }
    } else {
        auto xs = std::make_shared<std::vector<std::string>>();
        for (std::size_t i = 0; i < index->size(); ++i)
            xs->push_back(index->fragment(i));
        if (a.radius) {
            const auto scale = majorant_scale(qm, metric);
            const auto red = majorant_reduction<std::string, int>(xs, [scale](int e) { return scale.widen(e); });
            const auto method = linear_scan_method<std::string, FragmentQuery>(
                xs, [&metric](const FragmentQuery& q, const std::string& x) -> std::optional<int> {
                    const int d = string_dist(q.center, x, metric);
                    return d <= q.radius ? std::optional<int>(d) : std::nullopt;
                });
            const auto member = fragment_membership(qm);
            for (const auto& w : probes)
                rows.push_back(access_overhead(red, method, FragmentQuery{index->alphabet().decode(w), *a.radius},
                                               member));
        } else {
            if (*a.k == 0 || *a.k > index->size())
                throw ArgumentError("k must be between 1 and the number of fragments");
            const auto pts = all_points(*index);
            for (const auto& w : probes) {
                const auto p = qm_metric_ratio_probe(
                    pts, [&](const Ordinals& x, const Ordinals& y) { return ordinal_distance(qm.table(), x, y); },
                    [&](const Ordinals& x, const Ordinals& y) { return ordinal_distance(metric.table(), x, y); }, w,
                    *a.k);
                rows.push_back(make_overhead(p.metric_ball, p.qm_ball));
            }
        }
    }

    Sinks sinks(a.csv, out, err);
    auto& csv = sinks.csv();
    csv << "probe,answers,candidates,beta\n";
    double sum = 0, worst = 0;
    std::size_t counted = 0;
    for (std::size_t i = 0; i < rows.size(); ++i) {
        csv << i << ',' << rows[i].answers << ',' << rows[i].candidates << ',';
        if (rows[i].empty_answer()) {
            csv << "inf\n";
            continue;
        }
        csv << rows[i].beta << '\n';
        sum += rows[i].beta;
        worst = std::max(worst, rows[i].beta);
        ++counted;
    }
    sinks.info() << "access overhead (" << a.reduction << "): ";
    if (counted > 0)
        sinks.info() << "mean beta " << sum / double(counted) << ", max " << worst << " over " << counted
                     << " probes with answers";
    else
        sinks.info() << "every probe had an empty answer";
    sinks.info() << "; " << rows.size() - counted << " empty\n";
    return kExitOk;
}

int stats_certdist(const StatsArgs& a, std::ostream& out, std::ostream& err)
{
    if (a.anchor.empty())
        throw CLI::ValidationError("--anchor", "an anchor fragment is required");
    const auto index = load_index(a.index);
    const auto rows = cert_value_distribution(index, a.anchor, a.bin ? CertAnchor::bin : CertAnchor::point,
                                              a.samples, make_sampler(index, a.freq), a.seed);
    Sinks sinks(a.csv, out, err);
    write_value_csv(sinks.csv(), rows);
    sinks.info() << (a.bin ? "distances to the bin of " : "distances to ") << a.anchor << " over " << a.samples
                 << " random fragments\n";
    return kExitOk;
}

} // namespace

int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err)
{
    CLI::App app{"Quasi-metric similarity search over fixed-length peptide fragments", "qmidx"};
    app.require_subcommand(1);

    BuildArgs build;
    auto* b = app.add_subcommand("build", "Extract fragments from FASTA and write an index archive");
    b->add_option("--fasta", build.fasta, "Input FASTA file")->required();
    b->add_option("--matrix", build.matrix, "Similarity score matrix")->required();
    b->add_option("--partition", build.partition, "Group file, one group per line, or 'default'")
        ->capture_default_str();
    b->add_option("--m", build.m, "Fragment length")->capture_default_str()->check(CLI::PositiveNumber);
    b->add_option("--out", build.out, "Archive path")->required();

    QueryArgs query;
    auto* q = app.add_subcommand("query", "Range or k-nearest-neighbour search");
    q->add_option("--index", query.index, "Archive path")->required();
    q->add_option("--seq", query.seq, "Query fragment")->required();
    auto* q_radius = q->add_option("--radius", query.radius, "Left ball radius");
    auto* q_k = q->add_option("--k", query.k, "Number of neighbours")->check(CLI::PositiveNumber);
    q_radius->excludes(q_k);

    BenchArgs bench;
    auto* be = app.add_subcommand("bench", "Fraction of the dataset scanned by k-NN over random probes");
    be->add_option("--index", bench.index, "Archive path")->required();
    be->add_option("--k-list", bench.ks, "Comma-separated k values")->delimiter(',')->capture_default_str();
    be->add_option("--probes", bench.probes, "Number of random probes")->capture_default_str();
    be->add_option("--seed", bench.seed, "Random seed")->required();
    be->add_option("--freq", bench.freq, "Symbol frequency file ('symbol probability' lines)");
    be->add_option("--csv", bench.csv, "CSV output path (stdout if omitted)");

    StatsArgs st;
    auto* s = app.add_subcommand("stats", "Geometry diagnostics as CSV");
    s->require_subcommand(1);
    auto common = [&](CLI::App* c, bool seeded) {
        c->add_option("--index", st.index, "Archive path")->required();
        c->add_option("--csv", st.csv, "CSV output path (stdout if omitted)");
        if (seeded) {
            c->add_option("--seed", st.seed, "Random seed")->required();
            c->add_option("--freq", st.freq, "Symbol frequency file");
        }
    };
    auto* s_bins = s->add_subcommand("bins", "Bin size histogram");
    common(s_bins, false);

    auto* s_balls = s->add_subcommand("balls", "Ball growth around dataset points or random fragments");
    common(s_balls, true);
    s_balls->add_option("--radii", st.radii, "start:stop:step or comma list")->capture_default_str();
    s_balls->add_option("--centers", st.centers, "Number of centres")->capture_default_str()->check(
        CLI::PositiveNumber);
    s_balls->add_option("--mode", st.mode, "dataset: balls about data points; domain: neighbourhood of the data")
        ->check(CLI::IsMember({"dataset", "domain"}))
        ->capture_default_str();

    auto* s_ratio = s->add_subcommand("ratio", "Metric versus quasi-metric ball sizes for k-NN");
    common(s_ratio, true);
    s_ratio->add_option("--k", st.ks, "Comma-separated k values")->delimiter(',')->capture_default_str();
    s_ratio->add_option("--probes", st.probes, "Number of random probes")->capture_default_str()->check(
        CLI::PositiveNumber);
    s_ratio->add_option("--metric", st.metric, "max or sum")->check(CLI::IsMember({"max", "sum"}))->capture_default_str();

    auto* s_conc = s->add_subcommand("concentration", "Concentration function of a sampled sub-space");
    common(s_conc, true);
    s_conc->add_option("--points", st.points, "Sampled fragments")->capture_default_str();
    s_conc->add_flag("--exact", st.exact, "Exhaustive subset enumeration (at most 20 points)");
    s_conc->add_option("--anchors", st.anchors, "Anchors for the lower-bound estimator (0 = all)");
    s_conc->add_option("--metric", st.metric, "max or sum")->check(CLI::IsMember({"max", "sum"}))->capture_default_str();

    auto* s_over = s->add_subcommand("overhead", "Access overhead of a reduction over random probes");
    common(s_over, true);
    s_over->add_option("--reduction", st.reduction, "fragment or metric")
        ->check(CLI::IsMember({"fragment", "metric"}))
        ->capture_default_str();
    auto* o_radius = s_over->add_option("--radius", st.radius, "Range query radius");
    auto* o_k = s_over->add_option("--k", st.k, "k-NN query size")->check(CLI::PositiveNumber);
    o_radius->excludes(o_k);
    s_over->add_option("--probes", st.probes, "Number of random probes")->capture_default_str()->check(
        CLI::PositiveNumber);
    s_over->add_option("--metric", st.metric, "max or sum")->check(CLI::IsMember({"max", "sum"}))->capture_default_str();

    auto* s_cert = s->add_subcommand("certdist", "Distances from random fragments to an anchor or its bin");
    common(s_cert, true);
    s_cert->add_option("--anchor", st.anchor, "Anchor fragment")->required();
    s_cert->add_flag("--bin", st.bin, "Measure the distance to the anchor's bin");
    s_cert->add_option("--samples", st.samples, "Number of random fragments")->capture_default_str();

    try {
        std::vector<std::string> reversed(args.rbegin(), args.rend());
        app.parse(reversed);
        if (*b)
            return cmd_build(build, out);
        if (*q)
            return cmd_query(query, out, err);
        if (*be)
            return cmd_bench(bench, out, err);
        if (*s_bins)
            return stats_bins(st, out, err);
        if (*s_balls)
            return stats_balls(st, out, err);
        if (*s_ratio)
            return stats_ratio(st, out, err);
        if (*s_conc)
            return stats_concentration(st, out, err);
        if (*s_over)
            return stats_overhead(st, out, err);
        if (*s_cert)
            return stats_certdist(st, out, err);
        return kExitUsage;
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e, out, err);
        return code == 0 ? kExitOk : kExitUsage;
    } catch (const Error& e) {
        err << "error: " << e.what() << '\n';
        return kExitData;
    }
}

} // namespace qmidx::cli
