// Brute-force reference implementations used only by tests. Nothing here
// calls into the library's distance or search code.
#ifndef QMIDX_TESTS_ORACLES_HPP
#define QMIDX_TESTS_ORACLES_HPP

#include <algorithm>
#include <cstdint>
#include <fstream>
#include <map>
#include <random>
#include <set>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#ifndef QMIDX_DATA_DIR
#error "QMIDX_DATA_DIR must be defined"
#endif

namespace oracle {

inline std::string data_path(const std::string& name)
{
    return std::string(QMIDX_DATA_DIR) + "/" + name;
}

inline const std::string kAminoAcids = "ARNDCQEGHILKMFPSTWYV";

// Raw similarity scores read straight from the fixture file.
inline const std::map<char, std::map<char, int>>& blosum62()
{
    static const auto table = [] {
        std::ifstream in(data_path("blosum62.txt"));
        if (!in)
            throw std::runtime_error("missing blosum62 fixture");
        std::map<char, std::map<char, int>> s;
        std::string line, header;
        while (std::getline(in, line)) {
            if (line.empty() || line[0] == '#')
                continue;
            if (header.empty()) {
                std::istringstream h(line);
                std::string tok;
                while (h >> tok)
                    header += tok;
                continue;
            }
            std::istringstream r(line);
            char row;
            r >> row;
            for (char col : header) {
                int v;
                r >> v;
                s[row][col] = v;
            }
        }
        return s;
    }();
    return table;
}

inline int qd(char a, char b)
{
    const auto& s = blosum62();
    return s.at(a).at(a) - s.at(a).at(b);
}

inline int qdist(const std::string& x, const std::string& y)
{
    int sum = 0;
    for (std::size_t i = 0; i < x.size(); ++i)
        sum += qd(x[i], y[i]);
    return sum;
}

inline int mdist(const std::string& x, const std::string& y, bool sum_mode = false)
{
    int sum = 0;
    for (std::size_t i = 0; i < x.size(); ++i)
        sum += sum_mode ? qd(x[i], y[i]) + qd(y[i], x[i]) : std::max(qd(x[i], y[i]), qd(y[i], x[i]));
    return sum;
}

// { x : qdist(w, x) <= eps } as a set of strings.
inline std::set<std::string> range(const std::vector<std::string>& xs, const std::string& w, int eps)
{
    std::set<std::string> out;
    for (const auto& x : xs)
        if (qdist(w, x) <= eps)
            out.insert(x);
    return out;
}

// Sorted distances of the k nearest unique points.
inline std::vector<int> knn_distances(const std::vector<std::string>& xs, const std::string& w, std::size_t k)
{
    std::set<std::string> uniq(xs.begin(), xs.end());
    std::vector<int> d;
    for (const auto& x : uniq)
        d.push_back(qdist(w, x));
    std::sort(d.begin(), d.end());
    d.resize(std::min(k, d.size()));
    return d;
}

inline const std::vector<std::string>& default_groups()
{
    static const std::vector<std::string> g{"TSAN", "IVLM", "KRDEQ", "WFYH", "GPC"};
    return g;
}

inline std::string group_string(const std::string& x)
{
    std::string out;
    for (char c : x)
        for (std::size_t g = 0; g < default_groups().size(); ++g)
            if (default_groups()[g].find(c) != std::string::npos)
                out.push_back(char('0' + g));
    return out;
}

// size -> number of bins, over the full code space of 5^m bins.
inline std::map<std::uint64_t, std::uint64_t> bin_histogram(const std::vector<std::string>& xs, std::size_t m)
{
    std::map<std::string, std::set<std::string>> bins;
    for (const auto& x : xs)
        bins[group_string(x)].insert(x);
    std::map<std::uint64_t, std::uint64_t> h;
    for (const auto& [code, members] : bins)
        ++h[members.size()];
    std::uint64_t total = 1;
    for (std::size_t i = 0; i < m; ++i)
        total *= 5;
    if (total > bins.size())
        h[0] = total - bins.size();
    return h;
}

// Concentration function by direct enumeration of every subset, closed
// neighbourhoods, alpha(0) = 1/2.
inline double alpha(const std::vector<std::vector<double>>& d, const std::vector<double>& mu, double eps)
{
    if (eps == 0)
        return 0.5;
    const std::size_t n = d.size();
    double best = 1.0;
    for (std::uint64_t mask = 1; mask < (std::uint64_t(1) << n); ++mask) {
        double ma = 0;
        for (std::size_t i = 0; i < n; ++i)
            if (mask >> i & 1)
                ma += mu[i];
        if (ma < 0.5 - 1e-12)
            continue;
        double fat = 0;
        for (std::size_t x = 0; x < n; ++x) {
            bool near = false;
            for (std::size_t a = 0; a < n && !near; ++a)
                near = (mask >> a & 1) && d[a][x] <= eps;
            if (near)
                fat += mu[x];
        }
        best = std::min(best, fat);
    }
    return 1.0 - best;
}

// Number of blocks meeting the closed eps-ball about each point.
inline std::vector<std::size_t> blocks_met(const std::vector<std::vector<double>>& d,
                                           const std::vector<std::vector<std::size_t>>& blocks, double eps)
{
    std::vector<std::size_t> out;
    for (std::size_t w = 0; w < d.size(); ++w) {
        std::size_t c = 0;
        for (const auto& b : blocks) {
            bool meets = false;
            for (std::size_t x : b)
                meets = meets || d[w][x] <= eps;
            c += meets;
        }
        out.push_back(c);
    }
    return out;
}

inline std::string random_fragment(std::mt19937_64& rng, std::size_t m, const std::string& letters = kAminoAcids)
{
    std::uniform_int_distribution<std::size_t> pick(0, letters.size() - 1);
    std::string s(m, ' ');
    for (auto& c : s)
        c = letters[pick(rng)];
    return s;
}

inline std::vector<std::string> uniform_corpus(std::size_t n, std::size_t m, std::uint64_t seed)
{
    std::mt19937_64 rng(seed);
    std::vector<std::string> out;
    for (std::size_t i = 0; i < n; ++i)
        out.push_back(random_fragment(rng, m));
    return out;
}

// Robinson-Robinson style background frequencies, in kAminoAcids order.
inline const std::vector<double>& background_frequencies()
{
    static const std::vector<double> f{0.078, 0.051, 0.045, 0.054, 0.019, 0.043, 0.063, 0.074, 0.022, 0.051,
                                       0.090, 0.057, 0.022, 0.039, 0.052, 0.071, 0.058, 0.013, 0.032, 0.064};
    return f;
}

inline std::vector<std::string> biased_corpus(std::size_t n, std::size_t m, std::uint64_t seed)
{
    std::mt19937_64 rng(seed);
    std::discrete_distribution<std::size_t> pick(background_frequencies().begin(), background_frequencies().end());
    std::vector<std::string> out;
    for (std::size_t i = 0; i < n; ++i) {
        std::string s(m, ' ');
        for (auto& c : s)
            c = kAminoAcids[pick(rng)];
        out.push_back(s);
    }
    return out;
}

// Points obtained by mutating 0-3 positions of one of `seeds` random centres.
inline std::vector<std::string> clustered_corpus(std::size_t n, std::size_t m, std::size_t seeds, std::uint64_t seed)
{
    std::mt19937_64 rng(seed);
    std::vector<std::string> centres;
    for (std::size_t i = 0; i < seeds; ++i)
        centres.push_back(random_fragment(rng, m));
    std::uniform_int_distribution<std::size_t> which(0, seeds - 1), pos(0, m - 1), muts(0, 3), sym(0, 19);
    std::vector<std::string> out;
    for (std::size_t i = 0; i < n; ++i) {
        std::string s = centres[which(rng)];
        for (std::size_t k = muts(rng); k > 0; --k)
            s[pos(rng)] = kAminoAcids[sym(rng)];
        out.push_back(s);
    }
    return out;
}

} // namespace oracle

#endif
