#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "courtsim/domain.hpp"

namespace courtsim {

// ---------------------------------------------------------------------------
// Evaluation inputs

struct EvalCase {
    std::string case_id;
    Judgment predicted;
    Judgment truth;
    std::optional<StatutoryRange> truth_range;  // present iff truth imprisonment is numeric
};

// ---------------------------------------------------------------------------
// Metric primitives

/// One (P_i, T_i) value pair; nullopt marks a non-numeric side.
struct ErrorPair {
    std::optional<double> predicted;
    std::optional<double> truth;
};

struct RelativeErrorResult {
    double mean = 0.0;
    double stddev = 0.0;  // population standard deviation of per-case ratios
    std::size_t n_included = 0;
    std::size_t n_excluded = 0;
};

/// Fraction of cases whose numeric prediction lands in the truth's statutory
/// range. Non-numeric predictions and missing ranges count as misses, every
/// case counts in the denominator. Throws EmptyInput.
double hit_rate(const std::vector<EvalCase>& cases);

/// Mean/stddev of |P-T|/T over pairs with numeric T != 0 and numeric P;
/// other pairs are excluded and counted. Throws AllExcluded when nothing
/// remains.
RelativeErrorResult relative_error(const std::vector<ErrorPair>& values);

/// Proportion of (predicted, truth) flag pairs that agree. Throws EmptyInput.
double binary_accuracy(const std::vector<std::pair<bool, bool>>& flags);

// ---------------------------------------------------------------------------
// Significance

struct SignificanceResult {
    std::string aspect;
    double p_value = 1.0;
    std::size_t n_pairs = 0;
    std::string method;
};

inline constexpr std::size_t kDefaultResamples = 10000;

/// Two-sided paired permutation test on the mean difference of two aligned
/// per-case error vectors. Sign flips are drawn from a splitmix64 stream
/// derived from (seed, resample index), so the result is independent of
/// thread count. p = (1 + #{|resampled mean| >= |observed mean|}) / (1 + R).
/// Throws LengthMismatch when sizes differ or fewer than 2 pairs.
SignificanceResult significance(const std::vector<double>& errors_a,
                                const std::vector<double>& errors_b,
                                std::size_t resamples = kDefaultResamples,
                                std::uint64_t seed = 42, std::string aspect = {});

// ---------------------------------------------------------------------------
// Report assembly

struct AspectMetrics {
    std::optional<RelativeErrorResult> relative_error;  // nullopt when subset empty
    double categorical = 0.0;  // hit rate for imprisonment, accuracy otherwise
    std::size_t cat_included = 0;
    std::size_t cat_excluded = 0;
    /// Included per-case error ratios, aligned for significance pairing.
    std::vector<std::pair<std::string, double>> per_case_errors;
};

struct MetricsReport {
    std::size_t cases_total = 0;
    AspectMetrics imprisonment;
    AspectMetrics probation;
    AspectMetrics fine;
};

/// Full Table-style pipeline over a case set. Throws EmptyInput.
MetricsReport evaluate(const std::vector<EvalCase>& cases);

/// Renders the aligned text report (byte-exact; documented in README).
std::string render_metrics_report(const MetricsReport& report);

/// Structured JSON rendering of the same numbers.
std::string render_metrics_json(const MetricsReport& report,
                                const std::vector<SignificanceResult>& significance = {});

/// Appends the significance section for a second system.
std::string render_significance(const std::vector<SignificanceResult>& results,
                                std::size_t resamples, std::uint64_t seed);

// ---------------------------------------------------------------------------
// Judgment extraction

/// Extracts a Judgment from a judgment document: verdict block first, then
/// pattern extraction over Chinese sentencing phrases. Throws
/// ExtractionFailure when neither path yields an imprisonment term.
Judgment extract_judgment(const std::string& document);

// ---------------------------------------------------------------------------
// Prediction / truth files (JSONL; see README for the schema)

struct PredictionRecord {
    std::string case_id;
    Judgment judgment;
    std::optional<StatutoryRange> range;  // truth files only
};

std::vector<PredictionRecord> load_prediction_file(const std::string& path);

/// Aligns predictions with truths by case_id (truth order wins). Throws
/// AlignmentError listing unmatched ids on either side.
std::vector<EvalCase> align_cases(const std::vector<PredictionRecord>& predictions,
                                  const std::vector<PredictionRecord>& truths);

}  // namespace courtsim
