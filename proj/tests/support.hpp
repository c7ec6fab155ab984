// Shared fixtures built through the library.
#ifndef QMIDX_TESTS_SUPPORT_HPP
#define QMIDX_TESTS_SUPPORT_HPP

#include <string>
#include <vector>

#include "oracles.hpp"
#include "qmidx/fragment.hpp"
#include "qmidx/matrix.hpp"

namespace fixture {

inline const qmidx::SymbolQuasiMetric& blosum_qm()
{
    static const auto qm =
        qmidx::derive_symbol_quasimetric(qmidx::load_scoring_matrix(oracle::data_path("blosum62.txt")));
    return qm;
}

inline qmidx::FragmentIndex index_of(const std::vector<std::string>& xs)
{
    return qmidx::build_index(std::span<const std::string>(xs), qmidx::default_partition(), blosum_qm());
}

} // namespace fixture

#endif
