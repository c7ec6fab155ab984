#include "qmidx/ingest.hpp"

#include <algorithm>
#include <bit>
#include <cstring>
#include <fstream>
#include <istream>
#include <iterator>
#include <sstream>
#include <unordered_map>

namespace qmidx {

std::vector<SequenceRecord> parse_fasta(std::istream& in)
{
    std::vector<SequenceRecord> records;
    std::string line;
    std::size_t lineno = 0, header_line = 0;
    auto close_record = [&] {
        if (!records.empty() && records.back().residues.empty())
            throw ParseError(header_line, "record '" + records.back().id + "' has no sequence");
    };
    while (std::getline(in, line)) {
        ++lineno;
        if (!line.empty() && line.back() == '\r')
            line.pop_back();
        if (line.empty())
            continue;
        if (line[0] == '>') {
            close_record();
            header_line = lineno;
            const auto end = line.find_first_of(" \t", 1);
            records.push_back({line.substr(1, end == std::string::npos ? std::string::npos : end - 1), {}});
            continue;
        }
        if (records.empty())
            throw ParseError(lineno, "sequence data before the first header");
        for (char c : line) {
            if (c == ' ' || c == '\t')
                continue;
            if (!std::isalpha(static_cast<unsigned char>(c)) && c != '*' && c != '-')
                throw ParseError(lineno, std::string("unexpected character '") + c + "' in sequence");
            records.back().residues.push_back(c);
        }
    }
    if (records.empty())
        throw ParseError(lineno, "no FASTA records");
    close_record();
    return records;
}

std::vector<SequenceRecord> load_fasta(const std::filesystem::path& path)
{
    std::ifstream in(path);
    if (!in)
        throw Error("cannot open FASTA file " + path.string());
    return parse_fasta(in);
}

std::vector<FragmentCount> extract_fragments(const std::vector<SequenceRecord>& records, std::size_t m,
                                             const Alphabet& alphabet)
{
    if (m == 0)
        throw ArgumentError("fragment length must be at least 1");
    std::unordered_map<std::string, std::uint64_t> counts;
    for (const auto& rec : records) {
        const std::string& s = rec.residues;
        std::size_t clean = 0;  // length of the clean run ending at i
        for (std::size_t i = 0; i < s.size(); ++i) {
            clean = alphabet.contains(s[i]) ? clean + 1 : 0;
            if (clean >= m)
                ++counts[s.substr(i + 1 - m, m)];
        }
    }
    std::vector<FragmentCount> out;
    out.reserve(counts.size());
    for (auto& [frag, n] : counts)
        out.push_back({frag, n});
    std::sort(out.begin(), out.end(), [](const auto& a, const auto& b) { return a.fragment < b.fragment; });
    return out;
}

namespace {

constexpr char kMagic[4] = {'Q', 'M', 'I', 'X'};
constexpr std::uint64_t kFnvOffset = 14695981039346656037ull;
constexpr std::uint64_t kFnvPrime = 1099511628211ull;

std::uint64_t fnv1a(std::string_view bytes)
{
    std::uint64_t h = kFnvOffset;
    for (unsigned char c : bytes) {
        h ^= c;
        h *= kFnvPrime;
    }
    return h;
}

class Writer {
public:
    template <typename T>
    void put(T v)
    {
        using U = std::make_unsigned_t<T>;
        auto u = static_cast<U>(v);
        for (std::size_t i = 0; i < sizeof(U); ++i)
            buf_.push_back(static_cast<char>((u >> (8 * i)) & 0xff));
    }
    void bytes(std::string_view s) { buf_.append(s); }
    std::string& str() { return buf_; }

private:
    std::string buf_;
};

class Reader {
public:
    Reader(std::string_view data, std::string section) : data_(data), section_(std::move(section)) {}

    template <typename T>
    T get()
    {
        using U = std::make_unsigned_t<T>;
        need(sizeof(U));
        U u = 0;
        for (std::size_t i = 0; i < sizeof(U); ++i)
            u |= U(static_cast<unsigned char>(data_[pos_ + i])) << (8 * i);
        pos_ += sizeof(U);
        return static_cast<T>(u);
    }
    std::string_view bytes(std::uint64_t n)
    {
        need(n);
        auto s = data_.substr(pos_, std::size_t(n));
        pos_ += std::size_t(n);
        return s;
    }
    void finish() const
    {
        if (pos_ != data_.size())
            fail("unexpected trailing bytes");
    }
    [[noreturn]] void fail(const std::string& what) const
    {
        throw ArchiveError("archive section '" + section_ + "': " + what);
    }
    std::size_t remaining() const { return data_.size() - pos_; }
    void set_section(std::string section) { section_ = std::move(section); }

private:
    void need(std::uint64_t n) const
    {
        if (n > data_.size() - pos_)
            fail("truncated");
    }

    std::string_view data_;
    std::size_t pos_ = 0;
    std::string section_;
};

void put_section(Writer& out, const std::string& payload)
{
    out.put<std::uint64_t>(payload.size());
    out.bytes(payload);
}

} // namespace

std::string serialize_index(const FragmentIndex& index)
{
    Writer out;
    out.bytes(std::string_view(kMagic, 4));
    out.put<std::uint32_t>(kArchiveVersion);
    out.put<std::uint32_t>(static_cast<std::uint32_t>(index.m()));

    put_section(out, index.alphabet().symbols());

    Writer part;
    part.put<std::uint32_t>(static_cast<std::uint32_t>(index.partition().size()));
    for (const auto& g : index.partition().groups()) {
        part.put<std::uint32_t>(static_cast<std::uint32_t>(g.size()));
        part.bytes(g);
    }
    put_section(out, part.str());

    Writer qm;
    const auto& t = index.quasimetric().table();
    qm.put<std::uint32_t>(static_cast<std::uint32_t>(t.rows()));
    for (Eigen::Index i = 0; i < t.rows(); ++i)
        for (Eigen::Index j = 0; j < t.cols(); ++j)
            qm.put<std::int32_t>(t(i, j));
    put_section(out, qm.str());

    Writer frags;
    frags.put<std::uint64_t>(index.size());
    const auto& sym = index.symbols();
    frags.bytes(std::string_view(reinterpret_cast<const char*>(sym.data()), sym.size()));
    put_section(out, frags.str());

    Writer dir;
    dir.put<std::uint64_t>(index.directory().size());
    for (const auto& b : index.directory()) {
        dir.put<std::uint64_t>(b.code);
        dir.put<std::uint64_t>(b.begin);
        dir.put<std::uint64_t>(b.end);
    }
    put_section(out, dir.str());

    Writer cnt;
    cnt.put<std::uint64_t>(index.counts().size());
    for (auto c : index.counts())
        cnt.put<std::uint64_t>(c);
    put_section(out, cnt.str());

    const std::uint64_t h = fnv1a(out.str());
    out.put<std::uint64_t>(h);
    return std::move(out.str());
}

FragmentIndex deserialize_index(const std::string& bytes)
{
    Reader head(bytes, "header");
    if (head.bytes(4) != std::string_view(kMagic, 4))
        head.fail("bad magic, not a QMIX archive");
    const auto version = head.get<std::uint32_t>();
    if (version != kArchiveVersion)
        head.fail("unsupported version " + std::to_string(version) + " (expected " +
                  std::to_string(kArchiveVersion) + ")");
    const auto m = head.get<std::uint32_t>();
    if (m == 0)
        head.fail("fragment length is 0");

    const char* names[] = {"alphabet", "partition", "qm table", "fragments", "directory", "counts"};
    std::vector<std::string_view> payload;
    for (const char* name : names) {
        head.set_section(name);
        payload.push_back(head.bytes(head.get<std::uint64_t>()));
    }
    head.set_section("checksum");
    const auto stored = head.get<std::uint64_t>();
    head.finish();
    if (stored != fnv1a(std::string_view(bytes).substr(0, bytes.size() - 8)))
        head.fail("checksum mismatch");

    auto wrap = [](const char* section, auto&& fn) {
        try {
            return fn();
        } catch (const ArchiveError&) {
            throw;
        } catch (const Error& e) {
            throw ArchiveError(std::string("archive section '") + section + "': " + e.what());
        }
    };

    const Alphabet alphabet = wrap("alphabet", [&] { return Alphabet(payload[0]); });

    const Partition partition = wrap("partition", [&] {
        Reader r(payload[1], "partition");
        const auto g = r.get<std::uint32_t>();
        std::vector<std::string> groups;
        for (std::uint32_t i = 0; i < g; ++i) {
            const auto len = r.get<std::uint32_t>();
            groups.emplace_back(r.bytes(len));
        }
        r.finish();
        return Partition(alphabet, std::move(groups));
    });

    const SymbolQuasiMetric qm = wrap("qm table", [&] {
        Reader r(payload[2], "qm table");
        const auto n = r.get<std::uint32_t>();
        if (n != alphabet.size())
            r.fail("table size differs from the alphabet size");
        IntTable t(n, n);
        for (Eigen::Index i = 0; i < t.rows(); ++i)
            for (Eigen::Index j = 0; j < t.cols(); ++j)
                t(i, j) = r.get<std::int32_t>();
        r.finish();
        return SymbolQuasiMetric(alphabet, std::move(t));
    });

    std::vector<std::uint8_t> symbols = wrap("fragments", [&] {
        Reader r(payload[3], "fragments");
        const auto n = r.get<std::uint64_t>();
        if (n > r.remaining() / m)
            r.fail("truncated");
        const auto raw = r.bytes(n * m);
        r.finish();
        return std::vector<std::uint8_t>(raw.begin(), raw.end());
    });

    std::vector<FragmentIndex::Bin> directory = wrap("directory", [&] {
        Reader r(payload[4], "directory");
        const auto n = r.get<std::uint64_t>();
        if (n > r.remaining() / 24)
            r.fail("truncated");
        std::vector<FragmentIndex::Bin> d(n);
        for (auto& b : d) {
            b.code = r.get<std::uint64_t>();
            b.begin = r.get<std::uint64_t>();
            b.end = r.get<std::uint64_t>();
        }
        r.finish();
        return d;
    });

    std::vector<std::uint64_t> counts = wrap("counts", [&] {
        Reader r(payload[5], "counts");
        const auto n = r.get<std::uint64_t>();
        if (n > r.remaining() / 8)
            r.fail("truncated");
        std::vector<std::uint64_t> c(n);
        for (auto& v : c)
            v = r.get<std::uint64_t>();
        r.finish();
        return c;
    });

    return wrap("directory", [&] {
        return FragmentIndex::from_parts(m, partition, qm, std::move(symbols), std::move(directory),
                                         std::move(counts));
    });
}

void save_index(const FragmentIndex& index, const std::filesystem::path& path)
{
    const std::string bytes = serialize_index(index);
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out)
        throw Error("cannot write archive " + path.string());
    out.write(bytes.data(), std::streamsize(bytes.size()));
    if (!out)
        throw Error("failed writing archive " + path.string());
}

FragmentIndex load_index(const std::filesystem::path& path)
{
    std::ifstream in(path, std::ios::binary);
    if (!in)
        throw Error("cannot open archive " + path.string());
    std::string bytes((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
    return deserialize_index(bytes);
}

} // namespace qmidx
