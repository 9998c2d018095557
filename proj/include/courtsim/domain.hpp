#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

namespace courtsim {

// ---------------------------------------------------------------------------
// Roles and stages

enum class Role { Judge, Prosecutor, Attorney, Defendant, Stenographer };

enum class Stage {
    TrialPreparation,
    TrialInvestigation,
    EvidencePresentation,
    TrialDebate,
    FinalStatement,
    Concluded,
};

inline constexpr Role kAllRoles[] = {Role::Judge, Role::Prosecutor, Role::Attorney,
                                     Role::Defendant, Role::Stenographer};

/// The five active stages in canonical order (excludes Concluded).
inline constexpr Stage kActiveStages[] = {Stage::TrialPreparation, Stage::TrialInvestigation,
                                          Stage::EvidencePresentation, Stage::TrialDebate,
                                          Stage::FinalStatement};

std::string_view to_string(Role role);
std::string_view to_string(Stage stage);
std::optional<Role> role_from_string(std::string_view s);
std::optional<Stage> stage_from_string(std::string_view s);

/// Canonical successor (TrialPreparation -> ... -> Concluded).
Stage next_stage(Stage stage);

enum class PartySide { Prosecution, Defense };

std::string_view to_string(PartySide side);
std::optional<PartySide> side_from_string(std::string_view s);

// ---------------------------------------------------------------------------
// Case materials

struct EvidenceItem {
    std::string evidence_id;
    std::string title;
    std::string content;
    PartySide submitted_by = PartySide::Prosecution;
};

struct CaseMaterials {
    std::string case_id;
    std::string charge_label;
    std::string defendant_info;
    std::string indictment;
    std::vector<EvidenceItem> evidence;
};

struct Violation {
    std::string field;
    std::string rule;
};

/// Empty result iff all CaseMaterials invariants hold. Violations are data,
/// not failures.
std::vector<Violation> validate_case(const CaseMaterials& c);

/// JSON (de)serialization of the case input file schema.
std::string case_to_json(const CaseMaterials& c);
CaseMaterials case_from_json(const std::string& json_text);
CaseMaterials load_case_file(const std::string& path);
void save_case_file(const CaseMaterials& c, const std::string& path);

// ---------------------------------------------------------------------------
// Transcript

struct Utterance {
    std::uint64_t seq = 0;
    Stage stage = Stage::TrialPreparation;
    Role role = Role::Judge;
    std::string directive_kind;
    std::string text;
};

enum class SegmentKind { Canonical, Excursion, Resumed };

std::string_view to_string(SegmentKind kind);
std::optional<SegmentKind> segment_kind_from_string(std::string_view s);

/// A contiguous run of utterances spent in one stage. Backtracking inserts
/// excursion segments and a resumed debate segment; without backtracking all
/// segments are canonical and follow the stage order.
struct StageSegment {
    Stage stage = Stage::TrialPreparation;
    SegmentKind kind = SegmentKind::Canonical;
    std::uint64_t first_seq = 0;
    std::uint64_t last_seq = 0;
    bool empty = true;  // no utterance recorded yet
};

struct ReflectionEvent {
    Stage stage = Stage::TrialPreparation;
    Role role = Role::Judge;
    std::size_t segment_index = 0;
};

struct TrialTranscript {
    std::string case_id;
    std::vector<Utterance> utterances;
    std::vector<StageSegment> segments;
    std::vector<ReflectionEvent> reflection_events;
    /// (evidence_id, side) of the tried case, in presentation order; carried
    /// so conformance can re-check evidence coverage from the file alone.
    std::vector<std::pair<std::string, PartySide>> evidence_manifest;

    /// Stage boundaries of the canonical visits: stage -> (first_seq, last_seq).
    std::map<Stage, std::pair<std::uint64_t, std::uint64_t>> stage_boundaries() const;
};

// ---------------------------------------------------------------------------
// Judgments

/// Custodial outcome of a judgment. Fixed-term imprisonment and criminal
/// detention both carry a month count; NoCustody is distinct from Months(0)
/// so zero-truth exclusions stay explicit.
struct ImprisonmentTerm {
    enum class Kind { Months, LifeImprisonment, DeathPenalty, NoCustody };
    Kind kind = Kind::NoCustody;
    long long months = 0;  // meaningful only when kind == Months

    static ImprisonmentTerm of_months(long long m);
    static ImprisonmentTerm life();
    static ImprisonmentTerm death();
    static ImprisonmentTerm no_custody();

    bool is_numeric() const { return kind == Kind::Months; }
    bool operator==(const ImprisonmentTerm&) const = default;
};

/// Serialized form used in files and verdict blocks: integer month count,
/// or one of 无期徒刑 / 死刑 / 无.
std::string term_to_string(const ImprisonmentTerm& term);
std::optional<ImprisonmentTerm> term_from_string(std::string_view s);

struct CitedArticle {
    std::string law_name;
    long long article_number = 0;
    bool operator==(const CitedArticle&) const = default;
};

struct Judgment {
    ImprisonmentTerm imprisonment;
    bool probation_applicable = false;
    std::optional<long long> probation_months;
    bool fine_applicable = false;
    std::optional<long long> fine_amount;  // CNY
    std::string reasoning;
    std::vector<CitedArticle> cited_articles;
};

/// Enforces the Judgment invariants; throws InvalidCase on breach
/// (probation months without the flag, fine amount without the flag,
/// non-positive probation length, negative fine).
Judgment make_judgment(ImprisonmentTerm imprisonment, bool probation_applicable,
                       std::optional<long long> probation_months, bool fine_applicable,
                       std::optional<long long> fine_amount, std::string reasoning = {},
                       std::vector<CitedArticle> cited_articles = {});

struct StatutoryRange {
    long long lower = 0;  // months
    long long upper = 0;  // months
};

// ---------------------------------------------------------------------------
// Chinese legal value parsers

/// Parses a Chinese legal duration phrase (有期徒刑/拘役/无期徒刑/死刑/
/// 免予刑事处罚/单处罚金) into an ImprisonmentTerm. Years and months convert
/// to total months. Throws UnparseableDuration when nothing matches.
ImprisonmentTerm parse_duration(std::string_view text);

/// Parses a Chinese currency phrase into integer yuan. Accepts Chinese and
/// Arabic numerals. Throws UnparseableAmount when no numeral precedes 元.
long long parse_amount(std::string_view text);

/// Extracts cited articles of the form 《法名》第N条 from free text.
std::vector<CitedArticle> extract_cited_articles(std::string_view text);

}  // namespace courtsim
