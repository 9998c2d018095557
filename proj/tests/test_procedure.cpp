#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <set>

#include "courtsim/errors.hpp"
#include "courtsim/procedure.hpp"

using namespace courtsim;

namespace {

CaseMaterials fixture_case() {
    CaseMaterials c;
    c.case_id = "case_engine";
    c.charge_label = "盗窃罪";
    c.defendant_info = "被告人某";
    c.indictment = "指控事实。";
    c.evidence.push_back({"e1", "控方证据一", "内容", PartySide::Prosecution});
    c.evidence.push_back({"e2", "控方证据二", "内容", PartySide::Prosecution});
    c.evidence.push_back({"e3", "辩方证据一", "内容", PartySide::Defense});
    return c;
}

// drives the engine with placeholder text; reflections for every
// non-stenographer role at each segment end; optional backtrack at the first
// debate end
TrialTranscript drive_engine(TrialEngine& engine, std::optional<Stage> backtrack_target = {}) {
    bool backtracked = false;
    while (!engine.concluded()) {
        const auto turn = engine.next_directive();
        if (turn.kind == NextTurn::Kind::Directive) {
            engine.apply_utterance(turn.directive.role,
                                   "[" + std::string(to_string(turn.directive.role)) + "] " +
                                       turn.directive.kind);
            continue;
        }
        for (const Role role :
             {Role::Judge, Role::Prosecutor, Role::Attorney, Role::Defendant}) {
            engine.record_reflection(role);
        }
        if (!backtracked && backtrack_target && engine.backtrack_possible()) {
            backtracked = true;
            REQUIRE(engine.request_backtrack(*backtrack_target) == BacktrackOutcome::Granted);
            continue;
        }
        engine.advance_stage();
    }
    return engine.transcript();
}

}  // namespace

TEST_CASE("start_trial: preparation stage, stenographer first") {
    TrialEngine engine(fixture_case(), {});
    CHECK(engine.stage() == Stage::TrialPreparation);
    const auto first = engine.next_directive();
    REQUIRE(first.kind == NextTurn::Kind::Directive);
    CHECK(first.directive.role == Role::Stenographer);
    CHECK(first.directive.kind == "announce-rules");
}

TEST_CASE("start_trial rejects invalid cases") {
    auto bad = fixture_case();
    bad.indictment = "";
    CHECK_THROWS_AS(TrialEngine(bad, {}), InvalidCase);
    auto dup = fixture_case();
    dup.evidence.push_back({"e1", "重复", "内容", PartySide::Prosecution});
    CHECK_THROWS_AS(TrialEngine(dup, {}), InvalidCase);
}

TEST_CASE("preparation script order: identity, rights, recusal") {
    TrialEngine engine(fixture_case(), {});
    std::vector<std::pair<Role, std::string>> seen;
    while (true) {
        const auto turn = engine.next_directive();
        if (turn.kind != NextTurn::Kind::Directive) break;
        seen.emplace_back(turn.directive.role, turn.directive.kind);
        engine.apply_utterance(turn.directive.role, "x");
    }
    const std::vector<std::pair<Role, std::string>> expected = {
        {Role::Stenographer, "announce-rules"}, {Role::Judge, "verify-identity"},
        {Role::Defendant, "answer"},            {Role::Judge, "advise-rights"},
        {Role::Judge, "recusal-inquiry"},       {Role::Defendant, "answer"},
    };
    CHECK(seen == expected);
}

TEST_CASE("config primes round counts: debate_rounds=3 yields 3 prosecutor/attorney rounds") {
    ProcedureConfig config;
    config.debate_rounds = 3;
    const auto script = build_stage_script(Stage::TrialDebate, SegmentKind::Canonical,
                                           fixture_case(), config);
    std::size_t prosecutor_debates = 0;
    for (const auto& spec : script.turn_plan) {
        if (spec.role == Role::Prosecutor && spec.kind == "debate") ++prosecutor_debates;
    }
    CHECK(prosecutor_debates == 3);
    CHECK(script.turn_plan.front().kind == "debate-framing");
    CHECK(script.leader == Role::Judge);
}

TEST_CASE("investigation: prosecutor QA pairs then attorney then optional judge") {
    ProcedureConfig config;
    config.investigation_qa_pairs = 3;
    config.judge_questioning = true;
    const auto script = build_stage_script(Stage::TrialInvestigation, SegmentKind::Canonical,
                                           fixture_case(), config);
    REQUIRE(script.turn_plan.size() == 14);  // 3*2 + 3*2 + 2
    CHECK(script.turn_plan[0].role == Role::Prosecutor);
    CHECK(script.turn_plan[5].role == Role::Defendant);
    CHECK(script.turn_plan[6].role == Role::Attorney);  // after 3 prosecutor pairs
    CHECK(script.turn_plan[12].role == Role::Judge);
    config.judge_questioning = false;
    CHECK(build_stage_script(Stage::TrialInvestigation, SegmentKind::Canonical, fixture_case(),
                             config)
              .turn_plan.size() == 12);
}

TEST_CASE("evidence script pairs each item with an opposing examination") {
    const auto script = build_stage_script(Stage::EvidencePresentation, SegmentKind::Canonical,
                                           fixture_case(), {});
    REQUIRE(script.turn_plan.size() == 6);  // 3 items x (present + examine)
    CHECK(script.turn_plan[0].role == Role::Prosecutor);
    CHECK(script.turn_plan[0].kind == "present-evidence");
    CHECK(script.turn_plan[1].role == Role::Attorney);
    CHECK(script.turn_plan[1].kind == "examine-evidence");
    // defense item last: attorney presents, prosecutor examines
    CHECK(script.turn_plan[4].role == Role::Attorney);
    CHECK(script.turn_plan[5].role == Role::Prosecutor);
}

TEST_CASE("apply_utterance: role mismatch and seq monotonicity") {
    TrialEngine engine(fixture_case(), {});
    CHECK_THROWS_AS(engine.apply_utterance(Role::Prosecutor, "抢话"), OutOfTurn);
    engine.apply_utterance(Role::Stenographer, "a");
    engine.apply_utterance(Role::Judge, "b");
    engine.apply_utterance(Role::Defendant, "c");
    const auto& utterances = engine.transcript().utterances;
    REQUIRE(utterances.size() == 3);
    CHECK(utterances[0].seq == 0);
    CHECK(utterances[1].seq == 1);
    CHECK(utterances[2].seq == 2);
}

TEST_CASE("advance_stage: canonical successor and mid-script error") {
    TrialEngine engine(fixture_case(), {});
    CHECK_THROWS_AS(engine.advance_stage(), StageNotFinished);
    while (engine.next_directive().kind == NextTurn::Kind::Directive) {
        engine.apply_utterance(engine.next_directive().directive.role, "x");
    }
    engine.advance_stage();
    CHECK(engine.stage() == Stage::TrialInvestigation);
}

TEST_CASE("full engine walk is conformant, ends Concluded after judgment") {
    TrialEngine engine(fixture_case(), {});
    const auto transcript = drive_engine(engine);
    CHECK(engine.concluded());
    CHECK(conformance_check(transcript, {}).empty());
    CHECK(transcript.utterances.back().directive_kind == "judgment");
    // five canonical segments
    CHECK(transcript.segments.size() == 5);
    const auto bounds = transcript.stage_boundaries();
    CHECK(bounds.size() == 5);
}

TEST_CASE("backtracking: grant, budget exhaustion, illegal pairs") {
    ProcedureConfig config;
    TrialEngine engine(fixture_case(), config);

    // illegal while in preparation
    CHECK_THROWS_AS(engine.request_backtrack(Stage::TrialInvestigation), IllegalBacktrack);

    // drive to the end of debate
    while (true) {
        const auto turn = engine.next_directive();
        if (turn.kind == NextTurn::Kind::Directive) {
            engine.apply_utterance(turn.directive.role, "x");
            continue;
        }
        if (engine.stage() == Stage::TrialDebate) break;
        engine.advance_stage();
    }
    CHECK(engine.backtrack_possible());
    CHECK_THROWS_AS(engine.request_backtrack(Stage::TrialPreparation), IllegalBacktrack);
    CHECK(engine.request_backtrack(Stage::TrialInvestigation) == BacktrackOutcome::Granted);
    CHECK(engine.backtrack_budget() == 0);
    CHECK(engine.stage() == Stage::TrialInvestigation);
    // abbreviated script: one QA pair per side
    std::size_t turns = 0;
    while (engine.next_directive().kind == NextTurn::Kind::Directive) {
        engine.apply_utterance(engine.next_directive().directive.role, "x");
        ++turns;
    }
    CHECK(turns == 4);
    // excursion returns to a resumed debate
    engine.advance_stage();
    CHECK(engine.stage() == Stage::TrialDebate);
    while (engine.next_directive().kind == NextTurn::Kind::Directive) {
        engine.apply_utterance(engine.next_directive().directive.role, "x");
    }
    // second request refused: budget spent
    CHECK(engine.request_backtrack(Stage::TrialInvestigation) == BacktrackOutcome::Refused);
}

TEST_CASE("backtracked trial passes conformance with one extra debate round") {
    ProcedureConfig config;
    TrialEngine engine(fixture_case(), config);
    const auto transcript = drive_engine(engine, Stage::EvidencePresentation);
    const auto violations = conformance_check(transcript, config);
    for (const auto& v : violations) {
        CAPTURE(v.rule);
        CAPTURE(v.detail);
    }
    CHECK(violations.empty());
    std::size_t excursions = 0, resumed = 0;
    for (const auto& seg : transcript.segments) {
        if (seg.kind == SegmentKind::Excursion) ++excursions;
        if (seg.kind == SegmentKind::Resumed) ++resumed;
    }
    CHECK(excursions == 1);
    CHECK(resumed == 1);
}

TEST_CASE("conformance catches role violations, missing reflections, round drift") {
    TrialEngine engine(fixture_case(), {});
    auto transcript = drive_engine(engine);

    SUBCASE("prosecutor speaking during preparation") {
        auto broken = transcript;
        broken.utterances[0].role = Role::Prosecutor;  // was the stenographer
        const auto violations = conformance_check(broken, {});
        REQUIRE(!violations.empty());
        bool found = false;
        for (const auto& v : violations) {
            if (v.rule == "role-violation" &&
                v.detail.find("Prosecutor") != std::string::npos) {
                found = true;
            }
        }
        CHECK(found);
    }

    SUBCASE("missing judge reflection after investigation") {
        auto broken = transcript;
        std::size_t investigation_segment = 0;
        for (std::size_t i = 0; i < broken.segments.size(); ++i) {
            if (broken.segments[i].stage == Stage::TrialInvestigation) investigation_segment = i;
        }
        std::erase_if(broken.reflection_events, [&](const ReflectionEvent& ev) {
            return ev.segment_index == investigation_segment && ev.role == Role::Judge;
        });
        const auto violations = conformance_check(broken, {});
        bool found = false;
        for (const auto& v : violations) {
            if (v.rule == "reflection-violation" && v.detail.find("Judge") != std::string::npos) {
                found = true;
            }
        }
        CHECK(found);
    }

    SUBCASE("wrong debate round count") {
        ProcedureConfig five_rounds;
        five_rounds.debate_rounds = 5;
        const auto violations = conformance_check(transcript, five_rounds);
        bool found = false;
        for (const auto& v : violations) {
            if (v.rule == "debate-rounds") found = true;
        }
        CHECK(found);
    }

    SUBCASE("dropped allocution") {
        auto broken = transcript;
        for (auto& u : broken.utterances) {
            if (u.directive_kind == "allocution") u.directive_kind = "answer";
        }
        const auto violations = conformance_check(broken, {});
        bool found = false;
        for (const auto& v : violations) {
            if (v.rule == "allocution") found = true;
        }
        CHECK(found);
    }
}

TEST_CASE("conformance flags excursions beyond the backtrack budget") {
    TrialEngine engine(fixture_case(), {});
    const auto transcript = drive_engine(engine, Stage::TrialInvestigation);
    ProcedureConfig no_budget;
    no_budget.backtrack_budget = 0;
    const auto violations = conformance_check(transcript, no_budget);
    bool found = false;
    for (const auto& v : violations) {
        if (v.rule == "backtrack-budget") found = true;
    }
    CHECK(found);
}

TEST_CASE("transcript JSONL round-trip preserves everything") {
    ProcedureConfig config;
    config.judge_interjection = true;
    TrialEngine engine(fixture_case(), config);
    const auto transcript = drive_engine(engine);
    const auto text = transcript_to_jsonl(transcript, config);

    ProcedureConfig config_back;
    const auto parsed = transcript_from_jsonl(text, &config_back);
    CHECK(parsed.case_id == transcript.case_id);
    CHECK(parsed.utterances.size() == transcript.utterances.size());
    CHECK(parsed.segments.size() == transcript.segments.size());
    CHECK(parsed.reflection_events.size() == transcript.reflection_events.size());
    CHECK(parsed.evidence_manifest == transcript.evidence_manifest);
    CHECK(config_back.judge_interjection == true);
    CHECK(config_back.debate_rounds == config.debate_rounds);
    // re-serialization is byte-identical
    CHECK(transcript_to_jsonl(parsed, config_back) == text);
    // and the parsed transcript still passes conformance
    CHECK(conformance_check(parsed, config_back).empty());
}

TEST_CASE("engine walk is deterministic for fixed inputs") {
    ProcedureConfig config;
    TrialEngine a(fixture_case(), config);
    TrialEngine b(fixture_case(), config);
    const auto ta = transcript_to_jsonl(drive_engine(a), config);
    const auto tb = transcript_to_jsonl(drive_engine(b), config);
    CHECK(ta == tb);
}
