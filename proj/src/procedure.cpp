#include "courtsim/procedure.hpp"

#include <algorithm>
#include <map>
#include <optional>
#include <set>
#include <sstream>

#include "courtsim/errors.hpp"

namespace courtsim {

namespace {

void append_investigation_round(std::vector<TurnSpec>& plan, Role questioner, int round,
                                int total) {
    std::ostringstream hint;
    hint << "question the defendant about the case proceedings, outcomes and related aspects"
         << " (round " << round << " of " << total << ")";
    plan.push_back({questioner, "question", hint.str()});
    plan.push_back({Role::Defendant, "answer", "answer the question truthfully from the defendant's perspective"});
}

void append_evidence_items(std::vector<TurnSpec>& plan, const CaseMaterials& c, PartySide side) {
    const Role presenter = side == PartySide::Prosecution ? Role::Prosecutor : Role::Attorney;
    const Role examiner = side == PartySide::Prosecution ? Role::Attorney : Role::Prosecutor;
    for (const auto& item : c.evidence) {
        if (item.submitted_by != side) continue;
        plan.push_back({presenter, "present-evidence",
                        "present evidence " + item.evidence_id + " (" + item.title + ")"});
        plan.push_back({examiner, "examine-evidence",
                        "examine the opposing party's evidence " + item.evidence_id + " (" +
                            item.title + ")"});
    }
}

}  // namespace

StageScript build_stage_script(Stage stage, SegmentKind kind, const CaseMaterials& c,
                               const ProcedureConfig& config) {
    StageScript script;
    script.stage = stage;
    auto& plan = script.turn_plan;

    switch (stage) {
        case Stage::TrialPreparation:
            script.leader = Role::Stenographer;
            plan.push_back({Role::Stenographer, "announce-rules", "announce the rules of the court"});
            plan.push_back({Role::Judge, "verify-identity", "verify the identity of the parties"});
            plan.push_back({Role::Defendant, "answer", "state your identity for the record"});
            plan.push_back({Role::Judge, "advise-rights", "advise the defendant of their procedural rights"});
            plan.push_back({Role::Judge, "recusal-inquiry", "inquire whether any party requests recusal"});
            plan.push_back({Role::Defendant, "answer", "state whether you request any recusal"});
            break;

        case Stage::TrialInvestigation: {
            script.leader = Role::Prosecutor;
            const int pairs = kind == SegmentKind::Canonical ? config.investigation_qa_pairs : 1;
            for (int r = 1; r <= pairs; ++r) {
                append_investigation_round(plan, Role::Prosecutor, r, pairs);
            }
            for (int r = 1; r <= pairs; ++r) {
                append_investigation_round(plan, Role::Attorney, r, pairs);
            }
            if (kind == SegmentKind::Canonical && config.judge_questioning) {
                plan.push_back({Role::Judge, "question",
                                "question the defendant on points needing clarification"});
                plan.push_back({Role::Defendant, "answer",
                                "answer the question truthfully from the defendant's perspective"});
            }
            break;
        }

        case Stage::EvidencePresentation:
            script.leader = Role::Prosecutor;
            if (kind == SegmentKind::Canonical) {
                append_evidence_items(plan, c, PartySide::Prosecution);
                append_evidence_items(plan, c, PartySide::Defense);
            } else {
                plan.push_back({Role::Prosecutor, "review-evidence",
                                "revisit the disputed evidence in light of the debate"});
                plan.push_back({Role::Attorney, "review-evidence",
                                "revisit the disputed evidence in light of the debate"});
            }
            break;

        case Stage::TrialDebate: {
            script.leader = Role::Judge;
            const int rounds = kind == SegmentKind::Canonical ? config.debate_rounds : 1;
            if (kind == SegmentKind::Canonical) {
                plan.push_back({Role::Judge, "debate-framing",
                                "frame the issues for debate and provide guidance"});
            }
            for (int r = 1; r <= rounds; ++r) {
                std::ostringstream round_hint;
                round_hint << "debate the nature of the case, the application of law and sentencing"
                           << " (round " << r << " of " << rounds << ")";
                plan.push_back({Role::Prosecutor, "debate", round_hint.str()});
                plan.push_back({Role::Attorney, "debate", round_hint.str()});
                if (config.judge_interjection) {
                    plan.push_back({Role::Judge, "interject", "give brief guidance between rounds"});
                }
            }
            break;
        }

        case Stage::FinalStatement:
            script.leader = Role::Judge;
            plan.push_back({Role::Judge, "grant-allocution",
                            "grant the defendant the right to a final allocution"});
            plan.push_back({Role::Defendant, "allocution", "make your final statement"});
            plan.push_back({Role::Judge, "judgment",
                            "issue the final judgment document based on the case details and trial arguments"});
            break;

        case Stage::Concluded:
            break;
    }
    return script;
}

const std::vector<std::pair<Role, std::string>>& allowed_turns(Stage stage) {
    static const std::map<Stage, std::vector<std::pair<Role, std::string>>> table = {
        {Stage::TrialPreparation,
         {{Role::Stenographer, "announce-rules"},
          {Role::Judge, "verify-identity"},
          {Role::Judge, "advise-rights"},
          {Role::Judge, "recusal-inquiry"},
          {Role::Defendant, "answer"}}},
        {Stage::TrialInvestigation,
         {{Role::Prosecutor, "question"},
          {Role::Attorney, "question"},
          {Role::Judge, "question"},
          {Role::Defendant, "answer"}}},
        {Stage::EvidencePresentation,
         {{Role::Prosecutor, "present-evidence"},
          {Role::Attorney, "present-evidence"},
          {Role::Prosecutor, "examine-evidence"},
          {Role::Attorney, "examine-evidence"},
          {Role::Prosecutor, "review-evidence"},
          {Role::Attorney, "review-evidence"}}},
        {Stage::TrialDebate,
         {{Role::Judge, "debate-framing"},
          {Role::Prosecutor, "debate"},
          {Role::Attorney, "debate"},
          {Role::Judge, "interject"}}},
        {Stage::FinalStatement,
         {{Role::Judge, "grant-allocution"},
          {Role::Defendant, "allocution"},
          {Role::Judge, "judgment"}}},
    };
    static const std::vector<std::pair<Role, std::string>> empty;
    const auto it = table.find(stage);
    return it == table.end() ? empty : it->second;
}

// ---------------------------------------------------------------------------
// TrialEngine

TrialEngine::TrialEngine(CaseMaterials trial_case, ProcedureConfig config)
    : case_(std::move(trial_case)), config_(config), budget_(config.backtrack_budget) {
    const auto violations = validate_case(case_);
    if (!violations.empty()) {
        std::ostringstream msg;
        msg << "case " << case_.case_id << " is invalid:";
        for (const auto& v : violations) msg << " [" << v.field << "] " << v.rule << ";";
        throw InvalidCase(msg.str());
    }
    if (config_.debate_rounds < 1) throw ConfigError("debate_rounds must be >= 1");
    if (config_.investigation_qa_pairs < 1) throw ConfigError("investigation_qa_pairs must be >= 1");
    if (config_.backtrack_budget < 0) throw ConfigError("backtrack_budget must be >= 0");

    transcript_.case_id = case_.case_id;
    for (const auto& item : case_.evidence) {
        transcript_.evidence_manifest.emplace_back(item.evidence_id, item.submitted_by);
    }
    enter_segment(Stage::TrialPreparation, SegmentKind::Canonical);
}

void TrialEngine::enter_segment(Stage stage, SegmentKind kind) {
    stage_ = stage;
    segment_kind_ = kind;
    plan_ = build_stage_script(stage, kind, case_, config_).turn_plan;
    cursor_ = 0;
    StageSegment seg;
    seg.stage = stage;
    seg.kind = kind;
    seg.first_seq = next_seq_;
    seg.last_seq = next_seq_;
    seg.empty = true;
    transcript_.segments.push_back(seg);
}

NextTurn TrialEngine::next_directive() const {
    NextTurn out;
    if (stage_ == Stage::Concluded) {
        out.kind = NextTurn::Kind::TrialEnd;
        return out;
    }
    if (cursor_ < plan_.size()) {
        const auto& spec = plan_[cursor_];
        out.kind = NextTurn::Kind::Directive;
        out.directive = {spec.role, spec.kind, spec.hint};
        return out;
    }
    out.kind = stage_ == Stage::FinalStatement ? NextTurn::Kind::TrialEnd : NextTurn::Kind::StageEnd;
    return out;
}

void TrialEngine::apply_utterance(Role role, std::string text) {
    if (stage_ == Stage::Concluded || cursor_ >= plan_.size()) {
        throw OutOfTurn("no pending directive");
    }
    const auto& spec = plan_[cursor_];
    if (spec.role != role) {
        throw OutOfTurn(std::string("expected ") + std::string(to_string(spec.role)) + " (" +
                        spec.kind + "), got " + std::string(to_string(role)));
    }
    Utterance u;
    u.seq = next_seq_++;
    u.stage = stage_;
    u.role = role;
    u.directive_kind = spec.kind;
    u.text = std::move(text);
    transcript_.utterances.push_back(std::move(u));

    auto& seg = transcript_.segments.back();
    if (seg.empty) {
        seg.first_seq = transcript_.utterances.back().seq;
        seg.empty = false;
    }
    seg.last_seq = transcript_.utterances.back().seq;

    if (stage_ == Stage::TrialDebate && role == Role::Attorney && spec.kind == "debate") {
        ++debate_rounds_run_;
    }
    ++cursor_;
}

void TrialEngine::record_reflection(Role role) {
    ReflectionEvent ev;
    ev.stage = stage_;
    ev.role = role;
    ev.segment_index = transcript_.segments.size() - 1;
    transcript_.reflection_events.push_back(ev);
}

void TrialEngine::advance_stage() {
    if (stage_ == Stage::Concluded) throw StageNotFinished("trial already concluded");
    if (cursor_ < plan_.size()) {
        throw StageNotFinished("stage script has pending turns");
    }
    if (segment_kind_ == SegmentKind::Excursion) {
        // excursions return to the debate for one resumed round
        enter_segment(Stage::TrialDebate, SegmentKind::Resumed);
        return;
    }
    const Stage next = next_stage(stage_);
    if (next == Stage::Concluded) {
        stage_ = Stage::Concluded;
        plan_.clear();
        cursor_ = 0;
        return;
    }
    enter_segment(next, SegmentKind::Canonical);
}

bool TrialEngine::backtrack_possible() const {
    return stage_ == Stage::TrialDebate && cursor_ >= plan_.size() && budget_ > 0;
}

BacktrackOutcome TrialEngine::request_backtrack(Stage target) {
    if (stage_ != Stage::TrialDebate) {
        throw IllegalBacktrack("backtracking is only allowed from TrialDebate, current stage is " +
                               std::string(to_string(stage_)));
    }
    if (target != Stage::TrialInvestigation && target != Stage::EvidencePresentation) {
        throw IllegalBacktrack("backtrack target must be TrialInvestigation or EvidencePresentation");
    }
    if (cursor_ < plan_.size()) {
        throw IllegalBacktrack("backtracking is only allowed at the end of the debate script");
    }
    if (budget_ <= 0) return BacktrackOutcome::Refused;
    --budget_;
    enter_segment(target, SegmentKind::Excursion);
    return BacktrackOutcome::Granted;
}

// ---------------------------------------------------------------------------
// Conformance

namespace {

void add_violation(std::vector<ConformanceViolation>& out, const std::string& rule,
                   const std::string& detail) {
    out.push_back({rule, detail});
}

}  // namespace

std::vector<ConformanceViolation> conformance_check(const TrialTranscript& t,
                                                    const ProcedureConfig& config) {
    std::vector<ConformanceViolation> out;

    // (a) segment structure: canonical visits in canonical order, excursions
    // only between a debate segment and a resumed debate segment.
    std::vector<Stage> canonical_seen;
    for (std::size_t i = 0; i < t.segments.size(); ++i) {
        const auto& seg = t.segments[i];
        switch (seg.kind) {
            case SegmentKind::Canonical:
                canonical_seen.push_back(seg.stage);
                break;
            case SegmentKind::Excursion: {
                if (seg.stage != Stage::TrialInvestigation &&
                    seg.stage != Stage::EvidencePresentation) {
                    add_violation(out, "stage-order", "excursion into illegal stage " +
                                                          std::string(to_string(seg.stage)));
                }
                const bool prev_is_debate = i > 0 && t.segments[i - 1].stage == Stage::TrialDebate;
                const bool next_is_resumed = i + 1 < t.segments.size() &&
                                             t.segments[i + 1].stage == Stage::TrialDebate &&
                                             t.segments[i + 1].kind == SegmentKind::Resumed;
                if (!prev_is_debate || !next_is_resumed) {
                    add_violation(out, "stage-order",
                                  "excursion not bracketed by debate segments (index " +
                                      std::to_string(i) + ")");
                }
                break;
            }
            case SegmentKind::Resumed:
                if (seg.stage != Stage::TrialDebate || i == 0 ||
                    t.segments[i - 1].kind != SegmentKind::Excursion) {
                    add_violation(out, "stage-order", "resumed segment without preceding excursion");
                }
                break;
        }
    }
    {
        const std::vector<Stage> expected(kActiveStages, kActiveStages + 5);
        if (canonical_seen != expected) {
            add_violation(out, "stage-order", "canonical stage sequence is not the five-stage order");
        }
    }
    const std::size_t excursions =
        static_cast<std::size_t>(std::count_if(t.segments.begin(), t.segments.end(),
                                               [](const StageSegment& s) {
                                                   return s.kind == SegmentKind::Excursion;
                                               }));
    if (excursions > static_cast<std::size_t>(config.backtrack_budget)) {
        add_violation(out, "backtrack-budget",
                      "transcript has " + std::to_string(excursions) +
                          " excursions, budget is " + std::to_string(config.backtrack_budget));
    }

    // (b) per-utterance checks: seq monotone from 0, stage matches the
    // containing segment, (role, kind) allowed by the stage script.
    for (std::size_t i = 0; i < t.utterances.size(); ++i) {
        const auto& u = t.utterances[i];
        if (u.seq != i) {
            add_violation(out, "seq", "utterance seq " + std::to_string(u.seq) +
                                          " at position " + std::to_string(i));
        }
        if (u.stage == Stage::Concluded) {
            add_violation(out, "stage", "utterance in Concluded stage");
            continue;
        }
        const auto& allowed = allowed_turns(u.stage);
        const bool ok = std::any_of(allowed.begin(), allowed.end(), [&](const auto& p) {
            return p.first == u.role && p.second == u.directive_kind;
        });
        if (!ok) {
            add_violation(out, "role-violation",
                          std::string(to_string(u.role)) + " may not speak '" + u.directive_kind +
                              "' during " + std::string(to_string(u.stage)) + " (seq " +
                              std::to_string(u.seq) + ")");
        }
    }
    for (const auto& seg : t.segments) {
        if (seg.empty) continue;
        for (std::uint64_t s = seg.first_seq; s <= seg.last_seq && s < t.utterances.size(); ++s) {
            if (t.utterances[s].stage != seg.stage) {
                add_violation(out, "segment", "utterance seq " + std::to_string(s) +
                                                  " stage does not match its segment");
            }
        }
    }

    // (c) debate rounds: configured count, plus one resumed round per
    // excursion; judge framing opens the canonical debate.
    {
        std::size_t rounds = 0;
        for (const auto& u : t.utterances) {
            if (u.stage == Stage::TrialDebate && u.role == Role::Attorney &&
                u.directive_kind == "debate") {
                ++rounds;
            }
        }
        const std::size_t expected = static_cast<std::size_t>(config.debate_rounds) + excursions;
        if (rounds != expected) {
            add_violation(out, "debate-rounds", "expected " + std::to_string(expected) +
                                                    " debate rounds, found " +
                                                    std::to_string(rounds));
        }
        for (const auto& seg : t.segments) {
            if (seg.stage != Stage::TrialDebate || seg.kind != SegmentKind::Canonical || seg.empty) {
                continue;
            }
            const auto& first = t.utterances[seg.first_seq];
            if (first.role != Role::Judge || first.directive_kind != "debate-framing") {
                add_violation(out, "debate-framing", "debate does not open with judge framing");
            }
        }
    }

    // evidence coverage: one presentation per item, each immediately examined
    // by the opposing party.
    {
        std::size_t presented = 0;
        for (std::size_t i = 0; i < t.utterances.size(); ++i) {
            const auto& u = t.utterances[i];
            if (u.stage != Stage::EvidencePresentation || u.directive_kind != "present-evidence") {
                continue;
            }
            ++presented;
            const Role examiner = u.role == Role::Prosecutor ? Role::Attorney : Role::Prosecutor;
            const bool examined = i + 1 < t.utterances.size() &&
                                  t.utterances[i + 1].directive_kind == "examine-evidence" &&
                                  t.utterances[i + 1].role == examiner;
            if (!examined) {
                add_violation(out, "evidence-examination",
                              "presentation at seq " + std::to_string(u.seq) +
                                  " lacks an opposing examination turn");
            }
        }
        if (presented != t.evidence_manifest.size()) {
            add_violation(out, "evidence-count",
                          "expected " + std::to_string(t.evidence_manifest.size()) +
                              " presentations, found " + std::to_string(presented));
        }
    }

    // (d) allocution before judgment, judgment terminal and unique.
    {
        std::optional<std::uint64_t> allocution_seq, judgment_seq;
        std::size_t judgment_count = 0;
        for (const auto& u : t.utterances) {
            if (u.directive_kind == "allocution" && u.role == Role::Defendant && !allocution_seq) {
                allocution_seq = u.seq;
            }
            if (u.directive_kind == "judgment" && u.role == Role::Judge) {
                judgment_seq = u.seq;
                ++judgment_count;
            }
        }
        if (!judgment_seq) {
            add_violation(out, "judgment", "no judgment utterance");
        } else {
            if (judgment_count != 1) {
                add_violation(out, "judgment", "multiple judgment utterances");
            }
            if (!allocution_seq) {
                add_violation(out, "allocution", "no defendant allocution before judgment");
            } else if (*allocution_seq >= *judgment_seq) {
                add_violation(out, "allocution", "allocution does not precede judgment");
            }
            if (!t.utterances.empty() && t.utterances.back().seq != *judgment_seq) {
                add_violation(out, "judgment", "judgment is not the final utterance");
            }
        }
    }

    // (e) reflections: every non-stenographer role that spoke in a segment
    // reflected exactly once for that segment.
    {
        std::map<std::pair<std::size_t, Role>, int> reflected;
        for (const auto& ev : t.reflection_events) {
            ++reflected[{ev.segment_index, ev.role}];
        }
        for (std::size_t i = 0; i < t.segments.size(); ++i) {
            const auto& seg = t.segments[i];
            std::set<Role> spoke;
            if (!seg.empty) {
                for (std::uint64_t s = seg.first_seq; s <= seg.last_seq && s < t.utterances.size();
                     ++s) {
                    spoke.insert(t.utterances[s].role);
                }
            }
            for (const Role role : spoke) {
                if (role == Role::Stenographer) continue;
                const auto it = reflected.find({i, role});
                const int count = it == reflected.end() ? 0 : it->second;
                if (count != 1) {
                    add_violation(out, "reflection-violation",
                                  std::string(to_string(role)) + " has " + std::to_string(count) +
                                      " reflection events for segment " + std::to_string(i) + " (" +
                                      std::string(to_string(seg.stage)) + ")");
                }
            }
        }
    }

    return out;
}

}  // namespace courtsim
