#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "courtsim/domain.hpp"

namespace courtsim {

// ---------------------------------------------------------------------------
// Aspect catalog: 27 stage-wise aspects (3 stages x 3 roles x 3) plus 3
// overall entries.

enum class AspectStage { TrialInvestigation, EvidencePresentation, TrialDebate, Overall };

std::string_view to_string(AspectStage stage);
std::optional<AspectStage> aspect_stage_from_string(std::string_view s);

struct AspectEntry {
    std::string aspect_id;
    AspectStage stage = AspectStage::Overall;
    Role role = Role::Judge;
    std::string name;
};

class AspectCatalog {
public:
    /// The 30-entry catalog shipped with the repository.
    static AspectCatalog builtin();
    /// Loads a catalog from a JSON file and validates the 30-entry shape.
    static AspectCatalog load(const std::string& path);

    const std::vector<AspectEntry>& entries() const { return entries_; }
    const AspectEntry* find(const std::string& aspect_id) const;

private:
    void validate() const;
    std::vector<AspectEntry> entries_;
};

// ---------------------------------------------------------------------------
// Pair packaging and blinding

struct EvaluationPair {
    std::string pair_id;
    std::string record_first;
    std::string record_second;
};

/// pair_id -> position of the simulated record ("First"/"Second" as bool).
using BlindingKeys = std::map<std::string, bool>;  // true = sim is first

struct PairingResult {
    std::vector<EvaluationPair> pairs;
    BlindingKeys keys;
};

/// Packages matched (sim, human) record references into blinded pairs with
/// seeded position assignment. Throws LengthMismatch.
PairingResult make_pairs(const std::vector<std::string>& sim_records,
                         const std::vector<std::string>& human_records, std::uint64_t seed);

// ---------------------------------------------------------------------------
// Annotations and aggregation

enum class Preference { First, Second, Draw };

std::string_view to_string(Preference p);
std::optional<Preference> preference_from_string(std::string_view s);

struct AnnotationRecord {
    std::string pair_id;
    std::string aspect_id;
    std::string annotator_id;
    Preference preference = Preference::Draw;
};

enum class Outcome { Sim, Draw, Human };

struct AspectFractions {
    std::string aspect_id;
    double sim_fraction = 0.0;
    double draw_fraction = 0.0;
    double human_fraction = 0.0;
};

struct AggregateResult {
    std::vector<AspectFractions> rows;  // catalog order
    std::size_t n_pairs = 0;
    std::size_t n_annotators = 0;
};

/// Majority aggregation per (pair, aspect): map First/Second to Sim/Human via
/// the blinding key, drop Draw votes, majority of the remainder wins; no
/// majority (including no remaining votes) records a draw. Throws
/// MissingAnnotation naming the first gap.
AggregateResult aggregate(const std::vector<AnnotationRecord>& annotations,
                          const BlindingKeys& keys, const AspectCatalog& catalog);

/// Majority outcome of one vote set (already mapped to sim/human/draw).
Outcome majority_outcome(const std::vector<Outcome>& votes);

// ---------------------------------------------------------------------------
// Agreement

/// Cohen's kappa over two aligned label vectors. Throws LengthMismatch and
/// DegenerateMarginals (chance agreement of exactly 1 with imperfect
/// observed agreement cannot occur; identical constant vectors are the
/// degenerate case).
double cohen_kappa(const std::vector<Preference>& a, const std::vector<Preference>& b);

/// Average pairwise Cohen's kappa across all annotators; label vectors are
/// built over the (pair_id, aspect_id) grid in lexicographic order.
double average_kappa(const std::vector<AnnotationRecord>& annotations);

// ---------------------------------------------------------------------------
// Report and files

std::string render_process_report(const AggregateResult& result, const AspectCatalog& catalog);

/// Annotation file: CSV with header pair_id,aspect_id,annotator_id,preference.
std::vector<AnnotationRecord> load_annotation_file(const std::string& path);

/// Blinding-key file: JSON with a warning header field and a keys object.
BlindingKeys load_blinding_keys(const std::string& path);
void save_blinding_keys(const BlindingKeys& keys, const std::string& path);
void save_pairs_file(const std::vector<EvaluationPair>& pairs, const std::string& path);

}  // namespace courtsim
