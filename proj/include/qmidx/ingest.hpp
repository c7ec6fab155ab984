#ifndef QMIDX_INGEST_HPP
#define QMIDX_INGEST_HPP

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <string>
#include <vector>

#include "qmidx/fragment.hpp"

namespace qmidx {

struct SequenceRecord {
    std::string id;        // header text after '>' up to the first whitespace
    std::string residues;  // lowercase letters mark masked residues
};

// Throws ParseError on sequence data before the first header, on a record
// without residues, and on input with no records.
std::vector<SequenceRecord> parse_fasta(std::istream& in);
std::vector<SequenceRecord> load_fasta(const std::filesystem::path& path);

// Every length-m window made only of alphabet symbols, with its number of
// occurrences; sorted lexicographically. Windows touching any other
// character (masked lowercase, ambiguity codes, '*') are skipped.
std::vector<FragmentCount> extract_fragments(const std::vector<SequenceRecord>& records, std::size_t m,
                                             const Alphabet& alphabet);

inline constexpr std::uint32_t kArchiveVersion = 1;

// Archive layout: "QMIX", u32 version, u32 m, then the sections alphabet,
// partition, qm table, fragments, directory, counts, each as u64 byte
// length + payload, then the u64 FNV-1a hash of everything before it.
// All integers little-endian.
std::string serialize_index(const FragmentIndex& index);
FragmentIndex deserialize_index(const std::string& bytes);

void save_index(const FragmentIndex& index, const std::filesystem::path& path);
FragmentIndex load_index(const std::filesystem::path& path);

} // namespace qmidx

#endif // QMIDX_INGEST_HPP
