#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "courtsim/domain.hpp"

namespace courtsim {

// ---------------------------------------------------------------------------
// Stage scripts (data, not code)

struct TurnSpec {
    Role role = Role::Judge;
    std::string kind;
    std::string hint;
};

struct StageScript {
    Stage stage = Stage::TrialPreparation;
    Role leader = Role::Judge;
    std::vector<TurnSpec> turn_plan;
};

struct ProcedureConfig {
    int investigation_qa_pairs = 3;  // per side
    bool judge_questioning = true;   // optional judge Q/A pair in investigation
    int debate_rounds = 3;
    bool judge_interjection = false;  // judge line after each debate round
    int backtrack_budget = 1;
};

/// Builds the stage script for a segment kind. Canonical scripts follow the
/// configured counts; excursion scripts run one abbreviated round; the
/// resumed debate script runs one more round without re-framing.
StageScript build_stage_script(Stage stage, SegmentKind kind, const CaseMaterials& c,
                               const ProcedureConfig& config);

/// (role, kind) pairs a stage may legally contain, across all configurations
/// and segment kinds. The conformance oracle.
const std::vector<std::pair<Role, std::string>>& allowed_turns(Stage stage);

// ---------------------------------------------------------------------------
// Engine

struct Directive {
    Role role = Role::Judge;
    std::string kind;
    std::string hint;
};

struct NextTurn {
    enum class Kind { Directive, StageEnd, TrialEnd };
    Kind kind = Kind::StageEnd;
    Directive directive;  // valid when kind == Directive
};

enum class BacktrackOutcome { Granted, Refused };

/// Deterministic turn-taking for one trial. Construction validates the case
/// and opens TrialPreparation with the stenographer's announcement turn.
class TrialEngine {
public:
    TrialEngine(CaseMaterials trial_case, ProcedureConfig config);

    NextTurn next_directive() const;

    /// Appends the utterance for the pending directive. Throws OutOfTurn when
    /// `role` does not match.
    void apply_utterance(Role role, std::string text);

    /// Records a reflection event for the current segment.
    void record_reflection(Role role);

    /// Moves to the next segment. Throws StageNotFinished while the current
    /// script has pending turns.
    void advance_stage();

    /// Judge-initiated return from the end of TrialDebate. Granted while the
    /// budget lasts; Refused afterwards. Throws IllegalBacktrack for any
    /// other (from, to) pair or while the debate script is unfinished.
    BacktrackOutcome request_backtrack(Stage target);

    Stage stage() const { return stage_; }
    bool concluded() const { return stage_ == Stage::Concluded; }
    bool script_exhausted() const { return cursor_ >= plan_.size(); }
    bool backtrack_possible() const;
    int backtrack_budget() const { return budget_; }
    int debate_round() const { return debate_rounds_run_; }
    const TrialTranscript& transcript() const { return transcript_; }
    const CaseMaterials& trial_case() const { return case_; }
    const ProcedureConfig& config() const { return config_; }

private:
    void enter_segment(Stage stage, SegmentKind kind);

    CaseMaterials case_;
    ProcedureConfig config_;
    Stage stage_ = Stage::TrialPreparation;
    SegmentKind segment_kind_ = SegmentKind::Canonical;
    std::vector<TurnSpec> plan_;
    std::size_t cursor_ = 0;
    int budget_ = 0;
    int debate_rounds_run_ = 0;
    std::uint64_t next_seq_ = 0;
    TrialTranscript transcript_;
};

// ---------------------------------------------------------------------------
// Conformance

struct ConformanceViolation {
    std::string rule;
    std::string detail;
};

/// Protocol conformance of a finished transcript: canonical stage order,
/// roles/kinds permitted per stage, configured debate rounds (plus one per
/// excursion), one examination per evidence item, allocution before
/// judgment, reflections per speaking agent per segment.
std::vector<ConformanceViolation> conformance_check(const TrialTranscript& transcript,
                                                    const ProcedureConfig& config);

// ---------------------------------------------------------------------------
// Transcript serialization (JSONL, byte-exact; see README)

std::string transcript_to_jsonl(const TrialTranscript& transcript, const ProcedureConfig& config);
TrialTranscript transcript_from_jsonl(const std::string& text, ProcedureConfig* config_out = nullptr);
TrialTranscript load_transcript_file(const std::string& path, ProcedureConfig* config_out = nullptr);

}  // namespace courtsim
