#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <filesystem>
#include <fstream>
#include <map>
#include <set>

#include <nlohmann/json.hpp>

#include "courtsim/errors.hpp"
#include "courtsim/jsonl.hpp"
#include "courtsim/judgment_eval.hpp"
#include "courtsim/runner.hpp"

using namespace courtsim;
namespace fs = std::filesystem;

namespace {

const std::string kSourceDir = COURTSIM_SOURCE_DIR;

RunConfig base_config() {
    RunConfig config;
    config.templates_dir = kSourceDir + "/assets/templates";
    config.law_corpus_path = kSourceDir + "/assets/corpus/laws_sample.jsonl";
    config.alias_path = kSourceDir + "/assets/corpus/aliases.json";
    config.case_corpus_path = kSourceDir + "/assets/corpus/cases_sample.jsonl";
    config.backend_kind = "scripted";
    return config;
}

struct Loaded {
    TemplateLibrary tpl;
    LawCorpus law;
    CaseCorpus cases;
};

Loaded load_environment(const RunConfig& config) {
    return {TemplateLibrary::load(config.templates_dir),
            load_law_corpus(config.law_corpus_path, config.alias_path),
            load_case_corpus(config.case_corpus_path)};
}

fs::path fresh_dir(const std::string& name) {
    const fs::path dir = fs::temp_directory_path() / name;
    fs::remove_all(dir);
    fs::create_directories(dir);
    return dir;
}

}  // namespace

TEST_CASE("run_trial produces a conformant transcript with full reflection coverage") {
    const auto config = base_config();
    const auto env = load_environment(config);
    const auto backend = make_backend(config);
    const auto trial_case = load_case_file(kSourceDir + "/fixtures/cases/case_theft_01.json");

    const auto result = run_trial(trial_case, config, *backend, &env.law, &env.cases, env.tpl);
    const auto violations = conformance_check(result.transcript, config.procedure);
    for (const auto& v : violations) {
        CAPTURE(v.rule);
        CAPTURE(v.detail);
    }
    CHECK(violations.empty());
    CHECK(result.transcript.segments.size() == 5);
    CHECK(result.transcript.reflection_events.size() == 20);  // 4 roles x 5 stages
    CHECK(result.judgment.imprisonment.is_numeric());
    CHECK(result.judgment_document.find("===VERDICT===") != std::string::npos);

    // the transcript's judgment utterance is the judgment document
    CHECK(result.transcript.utterances.back().text == result.judgment_document);
}

TEST_CASE("run_trial is deterministic: byte-identical transcripts and documents") {
    const auto config = base_config();
    const auto env = load_environment(config);
    const auto backend = make_backend(config);
    const auto trial_case = load_case_file(kSourceDir + "/fixtures/cases/case_fraud_02.json");

    const auto first = run_trial(trial_case, config, *backend, &env.law, &env.cases, env.tpl);
    const auto second = run_trial(trial_case, config, *backend, &env.law, &env.cases, env.tpl);
    CHECK(transcript_to_jsonl(first.transcript, config.procedure) ==
          transcript_to_jsonl(second.transcript, config.procedure));
    CHECK(first.judgment_document == second.judgment_document);
}

TEST_CASE("judge-initiated backtrack is honored within budget end-to-end") {
    auto config = base_config();
    const auto env = load_environment(config);
    // judge's debate-stage call order: respond(framing)=0; reflection makes
    // turns 1..3; the backtrack decision is turn 4
    std::map<std::string, std::string> fixtures{
        {"case_theft_01|TrialDebate|Judge|4", "[[BACKTRACK:TrialInvestigation]]"}};
    ScriptedBackend backend(fixtures, false, make_synthetic_responder());
    const auto trial_case = load_case_file(kSourceDir + "/fixtures/cases/case_theft_01.json");

    const auto result = run_trial(trial_case, config, backend, &env.law, &env.cases, env.tpl);
    std::size_t excursions = 0, resumed = 0;
    for (const auto& seg : result.transcript.segments) {
        if (seg.kind == SegmentKind::Excursion) {
            ++excursions;
            CHECK(seg.stage == Stage::TrialInvestigation);
        }
        if (seg.kind == SegmentKind::Resumed) ++resumed;
    }
    CHECK(excursions == 1);
    CHECK(resumed == 1);
    CHECK(conformance_check(result.transcript, config.procedure).empty());
}

TEST_CASE("cmd_simulate: batch outputs, manifest, append-only run dirs") {
    auto config = base_config();
    const auto out_dir = fresh_dir("courtsim_it_simulate");
    config.output_dir = out_dir.string();
    const std::vector<std::string> case_files = {
        kSourceDir + "/fixtures/cases/case_theft_01.json",
        kSourceDir + "/fixtures/cases/case_fraud_02.json",
        kSourceDir + "/fixtures/cases/case_gamble_05.json",
    };
    CHECK(cmd_simulate(case_files, config, "run_a") == 0);

    const fs::path run_dir = out_dir / "run_a";
    CHECK(fs::exists(run_dir / "case_theft_01.transcript.jsonl"));
    CHECK(fs::exists(run_dir / "case_fraud_02.judgment.txt"));
    CHECK(fs::exists(run_dir / "manifest.json"));
    const auto manifest = nlohmann::json::parse(jsonl::slurp((run_dir / "manifest.json").string()));
    REQUIRE(manifest.at("cases").size() == 3);
    for (const auto& entry : manifest.at("cases")) {
        CHECK(entry.at("status") == "ok");
    }

    // append-only: the same run id is refused
    CHECK_THROWS_AS(cmd_simulate(case_files, config, "run_a"), ConfigError);

    // transcripts on disk re-check cleanly
    ProcedureConfig parsed_config;
    const auto transcript =
        load_transcript_file((run_dir / "case_theft_01.transcript.jsonl").string(), &parsed_config);
    CHECK(conformance_check(transcript, parsed_config).empty());
}

TEST_CASE("cmd_simulate: parallelism does not change per-case bytes") {
    auto config = base_config();
    const auto out_dir = fresh_dir("courtsim_it_parallel");
    config.output_dir = out_dir.string();
    const std::vector<std::string> case_files = {
        kSourceDir + "/fixtures/cases/case_theft_01.json",
        kSourceDir + "/fixtures/cases/case_fraud_02.json",
        kSourceDir + "/fixtures/cases/case_injury_03.json",
        kSourceDir + "/fixtures/cases/case_traffic_04.json",
    };
    config.parallelism = 1;
    CHECK(cmd_simulate(case_files, config, "serial") == 0);
    config.parallelism = 4;
    CHECK(cmd_simulate(case_files, config, "parallel") == 0);
    for (const auto* stem :
         {"case_theft_01", "case_fraud_02", "case_injury_03", "case_traffic_04"}) {
        for (const auto* suffix : {".transcript.jsonl", ".judgment.txt", ".judgment.json"}) {
            const auto a = jsonl::slurp((out_dir / "serial" / (std::string(stem) + suffix)).string());
            const auto b =
                jsonl::slurp((out_dir / "parallel" / (std::string(stem) + suffix)).string());
            CHECK(a == b);
        }
    }
}

TEST_CASE("cmd_simulate: one bad case never aborts the batch") {
    auto config = base_config();
    const auto out_dir = fresh_dir("courtsim_it_isolation");
    config.output_dir = out_dir.string();

    const auto bad_case = out_dir / "bad_case.json";
    jsonl::spit(bad_case.string(),
                "{\"case_id\":\"bad_case\",\"charge_label\":\"x\",\"defendant_info\":\"x\","
                "\"indictment\":\"\",\"evidence\":[]}\n");
    const std::vector<std::string> case_files = {
        kSourceDir + "/fixtures/cases/case_theft_01.json",
        bad_case.string(),
        kSourceDir + "/fixtures/cases/case_gamble_05.json",
    };
    CHECK(cmd_simulate(case_files, config, "mixed") == 1);
    const auto manifest =
        nlohmann::json::parse(jsonl::slurp((out_dir / "mixed" / "manifest.json").string()));
    int ok = 0, failed = 0;
    for (const auto& entry : manifest.at("cases")) {
        if (entry.at("status") == "ok") {
            ++ok;
        } else {
            ++failed;
            CHECK(entry.at("error").get<std::string>().find("invalid") != std::string::npos);
        }
    }
    CHECK(ok == 2);
    CHECK(failed == 1);
    CHECK(fs::exists(out_dir / "mixed" / "case_theft_01.transcript.jsonl"));
    CHECK(fs::exists(out_dir / "mixed" / "case_gamble_05.transcript.jsonl"));
}

TEST_CASE("cmd_simulate: replay cassette missing one case fails only that case") {
    auto config = base_config();
    const auto out_dir = fresh_dir("courtsim_it_replay");
    config.output_dir = out_dir.string();
    const std::string covered_a = kSourceDir + "/fixtures/cases/case_theft_01.json";
    const std::string covered_b = kSourceDir + "/fixtures/cases/case_fraud_02.json";
    const std::string uncovered = kSourceDir + "/fixtures/cases/case_gamble_05.json";

    // record a cassette covering only two of the three cases
    config.record = true;
    config.cassette_path = (out_dir / "trials.cassette.jsonl").string();
    REQUIRE(cmd_simulate({covered_a, covered_b}, config, "record_run") == 0);

    // replay the full batch: the uncovered case fails, the others succeed
    config.record = false;
    config.backend_kind = "replay";
    CHECK(cmd_simulate({covered_a, uncovered, covered_b}, config, "replay_run") == 1);
    const auto manifest = nlohmann::json::parse(
        jsonl::slurp((out_dir / "replay_run" / "manifest.json").string()));
    std::map<std::string, std::string> status;
    for (const auto& entry : manifest.at("cases")) {
        status[entry.at("case_id")] = entry.at("status");
    }
    CHECK(status.at("case_theft_01") == "ok");
    CHECK(status.at("case_fraud_02") == "ok");
    CHECK(status.at("case_gamble_05") == "failed");

    // replayed outputs are byte-identical to the recorded run's
    for (const auto* stem : {"case_theft_01", "case_fraud_02"}) {
        const auto file = std::string(stem) + ".transcript.jsonl";
        CHECK(jsonl::slurp((out_dir / "record_run" / file).string()) ==
              jsonl::slurp((out_dir / "replay_run" / file).string()));
    }
}

TEST_CASE("cmd_evaluate: report, run-dir input, significance columns") {
    const auto out_dir = fresh_dir("courtsim_it_eval");
    const auto truth_path = (out_dir / "truth.jsonl").string();
    const auto pred_a = (out_dir / "pred_a.jsonl").string();
    const auto pred_b = (out_dir / "pred_b.jsonl").string();
    std::string truth, a, b;
    for (int i = 0; i < 12; ++i) {
        const std::string id = "c" + std::to_string(i);
        truth += "{\"case_id\":\"" + id + "\",\"imprisonment\":24,\"probation\":\"无\",\"fine\":"
                 "2000,\"range\":{\"lower\":12,\"upper\":36}}\n";
        a += "{\"case_id\":\"" + id + "\",\"imprisonment\":" + std::to_string(22 + i % 3) +
             ",\"probation\":\"无\",\"fine\":2000}\n";
        b += "{\"case_id\":\"" + id + "\",\"imprisonment\":" + std::to_string(40 + i) +
             ",\"probation\":\"无\",\"fine\":100}\n";
    }
    jsonl::spit(truth_path, truth);
    jsonl::spit(pred_a, a);
    jsonl::spit(pred_b, b);

    std::string report;
    CHECK(cmd_evaluate(pred_a, truth_path, std::nullopt, std::nullopt, 42, 2000, &report) == 0);
    CHECK(report.find("cases_total: 12") != std::string::npos);
    CHECK(report.find("hit_rate        1.000") != std::string::npos);

    std::string with_b;
    CHECK(cmd_evaluate(pred_a, truth_path, pred_b, std::nullopt, 42, 2000, &with_b) == 0);
    CHECK(with_b.find("Significance vs. system B") != std::string::npos);
    CHECK(with_b.find("imprisonment") != std::string::npos);
    CHECK(with_b.find("**") != std::string::npos);  // B is far worse, p below 0.01

    // alignment failure lists the unmatched id
    jsonl::spit(pred_a, "{\"case_id\":\"zz\",\"imprisonment\":10}\n");
    CHECK_THROWS_AS(cmd_evaluate(pred_a, truth_path, std::nullopt, std::nullopt, 42, 100, nullptr),
                    AlignmentError);
}

TEST_CASE("cmd_evaluate accepts a simulate run directory as predictions") {
    auto config = base_config();
    const auto out_dir = fresh_dir("courtsim_it_eval_rundir");
    config.output_dir = out_dir.string();
    const std::vector<std::string> case_files = {
        kSourceDir + "/fixtures/cases/case_theft_01.json",
        kSourceDir + "/fixtures/cases/case_fraud_02.json",
    };
    REQUIRE(cmd_simulate(case_files, config, "for_eval") == 0);

    // truth with the same ids; months chosen to exercise both hit outcomes
    const auto truth_path = (out_dir / "truth.jsonl").string();
    jsonl::spit(truth_path,
                "{\"case_id\":\"case_theft_01\",\"imprisonment\":12,\"probation\":\"无\","
                "\"fine\":4000,\"range\":{\"lower\":0,\"upper\":360}}\n"
                "{\"case_id\":\"case_fraud_02\",\"imprisonment\":18,\"probation\":\"无\","
                "\"fine\":\"无\",\"range\":{\"lower\":0,\"upper\":360}}\n");
    std::string report;
    CHECK(cmd_evaluate((out_dir / "for_eval").string(), truth_path, std::nullopt, std::nullopt, 42,
                       100, &report) == 0);
    CHECK(report.find("cases_total: 2") != std::string::npos);
}

TEST_CASE("cmd_ingest: scripted extraction produces a valid case file") {
    auto config = base_config();
    config.fixture_path = kSourceDir + "/fixtures/ingest/ingest_fixture.jsonl";
    config.scripted_strict = true;
    const auto out_dir = fresh_dir("courtsim_it_ingest");
    const auto out_path = (out_dir / "case_ingest_01.json").string();

    CHECK(cmd_ingest(kSourceDir + "/fixtures/ingest/raw_case_doc.txt", "case_ingest_01", "盗窃罪",
                     config, out_path) == 0);
    const auto loaded = load_case_file(out_path);
    CHECK(validate_case(loaded).empty());
    CHECK(loaded.case_id == "case_ingest_01");
    CHECK(loaded.evidence.size() == 4);
    CHECK(loaded.evidence[3].submitted_by == PartySide::Defense);

    // fixture whose response lacks evidence -> named incomplete component
    try {
        cmd_ingest(kSourceDir + "/fixtures/ingest/raw_case_doc.txt", "case_ingest_02", "盗窃罪",
                   config, (out_dir / "x.json").string());
        FAIL("expected ExtractionIncomplete");
    } catch (const ExtractionIncomplete& e) {
        CHECK(std::string(e.what()).find("evidence") != std::string::npos);
    }
}

TEST_CASE("cmd_aggregate renders the fixture report") {
    const auto out_dir = fresh_dir("courtsim_it_aggregate");
    std::string report;
    CHECK(cmd_aggregate(kSourceDir + "/fixtures/process_eval/annotations.csv",
                        kSourceDir + "/fixtures/process_eval/blinding_keys.json", std::nullopt,
                        (out_dir / "report.txt").string(), &report) == 0);
    CHECK(report.find("Trial Process Evaluation Report") == 0);
    CHECK(report.find("average pairwise Cohen's kappa") != std::string::npos);
    CHECK(jsonl::slurp((out_dir / "report.txt").string()) == report);
}

TEST_CASE("config file loading and validation") {
    const auto out_dir = fresh_dir("courtsim_it_config");
    const auto path = (out_dir / "run.conf").string();
    jsonl::spit(path,
                "# comment\n"
                "debate_rounds = 4\n"
                "judge_questioning = off\n"
                "parallelism = 2\n"
                "backend = scripted\n"
                "temperature = 0.5\n");
    const auto config = load_run_config(path);
    CHECK(config.procedure.debate_rounds == 4);
    CHECK_FALSE(config.procedure.judge_questioning);
    CHECK(config.parallelism == 2);
    CHECK(config.agent.temperature == 0.5);

    jsonl::spit(path, "debate_rounds = 0\n");
    CHECK_THROWS_AS(load_run_config(path), ConfigError);
    jsonl::spit(path, "unknown_key = 1\n");
    CHECK_THROWS_AS(load_run_config(path), ConfigError);
    jsonl::spit(path, "no equals sign\n");
    CHECK_THROWS_AS(load_run_config(path), ConfigError);
}
