#pragma once

// Serial brute-force reference implementations used as oracles by the test
// and acceptance suites, and as the baseline for the benchmark target. These
// deliberately do not call into the production metric/search kernels.

#include <cstdint>
#include <string>
#include <vector>

#include "courtsim/judgment_eval.hpp"
#include "courtsim/retrieval.hpp"

namespace courtsim::reference {

double hit_rate(const std::vector<EvalCase>& cases);

struct RelErr {
    double mean = 0.0;
    double stddev = 0.0;
    std::size_t n_included = 0;
    std::size_t n_excluded = 0;
};
RelErr relative_error(const std::vector<ErrorPair>& values);

double binary_accuracy(const std::vector<std::pair<bool, bool>>& flags);

/// Serial permutation test with the pinned splitmix64 resampling scheme.
double permutation_p(const std::vector<double>& errors_a, const std::vector<double>& errors_b,
                     std::size_t resamples, std::uint64_t seed);

struct ScoredDoc {
    std::string case_id;
    double score = 0.0;
};
/// Scores and ranks every document (descending score, ties by ascending id).
std::vector<ScoredDoc> bm25_rank(const std::vector<CaseRecord>& docs, const std::string& query);

/// Chinese numerals 0..31, as a literal table (independent of the parser).
const char* chinese_numeral(int n);

}  // namespace courtsim::reference
