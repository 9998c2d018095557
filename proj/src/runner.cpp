#include "courtsim/runner.hpp"

#include <algorithm>
#include <chrono>
#include <filesystem>
#include <iostream>
#include <map>
#include <sstream>

#include <nlohmann/json.hpp>

#include "courtsim/errors.hpp"
#include "courtsim/jsonl.hpp"
#include "courtsim/judgment_eval.hpp"
#include "courtsim/process_eval.hpp"
#include "courtsim/zh_text.hpp"

namespace courtsim {

namespace fs = std::filesystem;
using ordered_json = nlohmann::ordered_json;

namespace {

const Role kReflectiveRoles[] = {Role::Judge, Role::Prosecutor, Role::Attorney, Role::Defendant};

std::optional<Stage> parse_backtrack_token(const std::string& decision) {
    if (decision.find("[[BACKTRACK:TrialInvestigation]]") != std::string::npos) {
        return Stage::TrialInvestigation;
    }
    if (decision.find("[[BACKTRACK:EvidencePresentation]]") != std::string::npos) {
        return Stage::EvidencePresentation;
    }
    return std::nullopt;
}

std::string sanitize_id(const std::string& id) {
    std::string out;
    for (const char c : id) {
        const bool ok = (c >= 'a' && c <= 'z') || (c >= 'A' && c <= 'Z') ||
                        (c >= '0' && c <= '9') || c == '-' || c == '_';
        out.push_back(ok ? c : '_');
    }
    return out.empty() ? "case" : out;
}

ordered_json judgment_to_prediction_json(const std::string& case_id, const Judgment& j) {
    ordered_json out;
    out["case_id"] = case_id;
    if (j.imprisonment.is_numeric()) {
        out["imprisonment"] = j.imprisonment.months;
    } else {
        out["imprisonment"] = term_to_string(j.imprisonment);
    }
    if (j.probation_applicable) {
        if (j.probation_months) {
            out["probation"] = *j.probation_months;
        } else {
            out["probation"] = "适用";
        }
    } else {
        out["probation"] = "无";
    }
    if (j.fine_applicable) {
        if (j.fine_amount) {
            out["fine"] = *j.fine_amount;
        } else {
            out["fine"] = "适用";
        }
    } else {
        out["fine"] = "无";
    }
    ordered_json articles = ordered_json::array();
    for (const auto& a : j.cited_articles) {
        articles.push_back(a.law_name + ":" + std::to_string(a.article_number));
    }
    out["articles"] = std::move(articles);
    return out;
}

}  // namespace

TrialResult run_trial(const CaseMaterials& trial_case, const RunConfig& config, Backend& backend,
                      const LawCorpus* law, const CaseCorpus* cases, const TemplateLibrary& tpl,
                      std::string* stage_reached) {
    TrialResult result;
    auto warn = [&result](const std::string& message) { result.warnings.push_back(message); };

    TrialEngine engine(trial_case, config.procedure);
    auto note_stage = [&engine, stage_reached] {
        if (stage_reached) *stage_reached = std::string(to_string(engine.stage()));
    };
    note_stage();
    std::map<Role, std::unique_ptr<Agent>> agents;
    for (const Role role : kAllRoles) {
        agents[role] = std::make_unique<Agent>(role, trial_case, tpl, config.agent, warn);
    }
    for (const Role role : kReflectiveRoles) {
        agents.at(role)->init_strategies(law, cases, backend);
    }
    for (const Role role : kAllRoles) {
        agents.at(role)->enter_stage(engine.stage());
    }

    bool have_judgment = false;
    while (!engine.concluded()) {
        const NextTurn turn = engine.next_directive();
        if (turn.kind == NextTurn::Kind::Directive) {
            Agent& speaker = *agents.at(turn.directive.role);
            std::string text;
            if (turn.directive.kind == "judgment") {
                auto [judgment, document] = speaker.draft_judgment(backend);
                result.judgment = std::move(judgment);
                result.judgment_document = document;
                have_judgment = true;
                text = std::move(document);
            } else {
                text = speaker.respond(turn.directive, backend);
            }
            engine.apply_utterance(turn.directive.role, std::move(text));
            const Utterance& spoken = engine.transcript().utterances.back();
            for (const Role role : kReflectiveRoles) {
                agents.at(role)->observe(spoken);
            }
            continue;
        }

        // segment over: reflections, optional backtrack, advance
        const Stage ending = engine.stage();
        for (const Role role : kReflectiveRoles) {
            agents.at(role)->reflect(ending, law, cases, backend);
            engine.record_reflection(role);
        }
        if (engine.backtrack_possible()) {
            const std::string decision = agents.at(Role::Judge)->decide_backtrack(backend);
            if (const auto target = parse_backtrack_token(decision)) {
                if (engine.request_backtrack(*target) == BacktrackOutcome::Granted) {
                    for (const Role role : kAllRoles) {
                        agents.at(role)->enter_stage(engine.stage());
                    }
                    continue;
                }
            }
        }
        engine.advance_stage();
        note_stage();
        if (!engine.concluded()) {
            for (const Role role : kAllRoles) {
                agents.at(role)->enter_stage(engine.stage());
            }
        }
    }
    if (!have_judgment) {
        throw VerdictParseFailure("trial concluded without a judgment", "");
    }
    result.transcript = engine.transcript();
    return result;
}

int cmd_simulate(const std::vector<std::string>& case_paths, const RunConfig& config,
                 const std::string& run_id) {
    if (case_paths.empty()) throw ConfigError("simulate: no case files given");
    if (config.parallelism < 1) throw ConfigError("parallelism must be >= 1");

    const TemplateLibrary tpl = TemplateLibrary::load(config.templates_dir);
    std::optional<LawCorpus> law;
    if (!config.law_corpus_path.empty()) {
        law = load_law_corpus(config.law_corpus_path,
                              config.alias_path.empty()
                                  ? std::nullopt
                                  : std::optional<std::string>(config.alias_path));
    }
    std::optional<CaseCorpus> cases;
    if (!config.case_corpus_path.empty()) {
        cases = load_case_corpus(config.case_corpus_path);
    }
    const auto backend = make_backend(config);

    const fs::path run_dir = fs::path(config.output_dir) / run_id;
    if (fs::exists(run_dir)) {
        throw ConfigError("run directory already exists (runs are append-only): " +
                          run_dir.string());
    }
    fs::create_directories(run_dir);

    std::vector<CaseStatus> statuses(case_paths.size());
    const auto n_cases = static_cast<long long>(case_paths.size());
#pragma omp parallel for num_threads(config.parallelism) schedule(dynamic)
    for (long long i = 0; i < n_cases; ++i) {
        CaseStatus& status = statuses[i];
        const auto started = std::chrono::steady_clock::now();
        try {
            const CaseMaterials trial_case = load_case_file(case_paths[i]);
            status.case_id = trial_case.case_id;
            const TrialResult result =
                run_trial(trial_case, config, *backend, law ? &*law : nullptr,
                          cases ? &*cases : nullptr, tpl, &status.stage_reached);

            const auto violations = conformance_check(result.transcript, config.procedure);
            if (!violations.empty()) {
                std::ostringstream msg;
                msg << "conformance violations:";
                for (const auto& v : violations) msg << " [" << v.rule << "] " << v.detail << ";";
                throw Error(msg.str());
            }

            const std::string stem = sanitize_id(trial_case.case_id);
            const fs::path transcript_path = run_dir / (stem + ".transcript.jsonl");
            const fs::path doc_path = run_dir / (stem + ".judgment.txt");
            const fs::path json_path = run_dir / (stem + ".judgment.json");
            jsonl::spit(transcript_path.string(),
                        transcript_to_jsonl(result.transcript, config.procedure));
            jsonl::spit(doc_path.string(), result.judgment_document);
            jsonl::spit(json_path.string(),
                        judgment_to_prediction_json(trial_case.case_id, result.judgment).dump() +
                            "\n");
            status.outputs = {transcript_path.string(), doc_path.string(), json_path.string()};
            status.ok = true;
        } catch (const std::exception& e) {
            if (status.case_id.empty()) status.case_id = case_paths[i];
            status.ok = false;
            status.error = e.what();
        }
        status.timing_ms = std::chrono::duration<double, std::milli>(
                               std::chrono::steady_clock::now() - started)
                               .count();
    }

    RunManifest manifest;
    manifest.run_id = run_id;
    manifest.cases = std::move(statuses);

    ordered_json jm;
    jm["run_id"] = manifest.run_id;
    jm["config"] = {{"backend", config.backend_kind},
                    {"seed", config.seed},
                    {"parallelism", config.parallelism},
                    {"debate_rounds", config.procedure.debate_rounds},
                    {"investigation_qa_pairs", config.procedure.investigation_qa_pairs},
                    {"judge_questioning", config.procedure.judge_questioning},
                    {"judge_interjection", config.procedure.judge_interjection},
                    {"backtrack_budget", config.procedure.backtrack_budget}};
    jm["cases"] = ordered_json::array();
    bool any_failed = false;
    for (const auto& status : manifest.cases) {
        ordered_json js;
        js["case_id"] = status.case_id;
        js["status"] = status.ok ? "ok" : "failed";
        if (!status.ok) {
            js["error"] = status.error;
            any_failed = true;
        }
        js["stage_reached"] = status.stage_reached;
        js["timing_ms"] = status.timing_ms;
        js["outputs"] = status.outputs;
        jm["cases"].push_back(std::move(js));
    }
    jsonl::spit((run_dir / "manifest.json").string(), jm.dump(2) + "\n");
    std::cout << "run " << manifest.run_id << ": " << manifest.cases.size() << " case(s), "
              << (any_failed ? "with failures" : "all ok") << ", outputs in " << run_dir.string()
              << "\n";
    return any_failed ? 1 : 0;
}

std::string predictions_from_run_dir(const std::string& run_dir) {
    std::vector<fs::path> files;
    for (const auto& entry : fs::directory_iterator(run_dir)) {
        if (!entry.is_regular_file()) continue;
        const auto name = entry.path().filename().string();
        if (name.size() > 14 && name.substr(name.size() - 14) == ".judgment.json") {
            files.push_back(entry.path());
        }
    }
    std::sort(files.begin(), files.end());
    std::string out;
    for (const auto& f : files) out += jsonl::slurp(f.string());
    return out;
}

int cmd_evaluate(const std::string& predictions_path, const std::string& truth_path,
                 const std::optional<std::string>& predictions_b_path,
                 const std::optional<std::string>& report_out, std::uint64_t seed,
                 std::size_t resamples, std::string* report_text_out) {
    auto load_predictions = [](const std::string& path) {
        if (fs::is_directory(path)) {
            const std::string jsonl_text = predictions_from_run_dir(path);
            const fs::path tmp = fs::temp_directory_path() /
                                 ("courtsim_preds_" + std::to_string(fnv1a64(path)) + ".jsonl");
            jsonl::spit(tmp.string(), jsonl_text);
            auto records = load_prediction_file(tmp.string());
            fs::remove(tmp);
            return records;
        }
        return load_prediction_file(path);
    };

    const auto truths = load_prediction_file(truth_path);
    const auto predictions = load_predictions(predictions_path);
    const auto cases = align_cases(predictions, truths);
    const MetricsReport report = evaluate(cases);
    std::string text = render_metrics_report(report);
    std::vector<SignificanceResult> significance_results;

    if (predictions_b_path) {
        const auto predictions_b = load_predictions(*predictions_b_path);
        const auto cases_b = align_cases(predictions_b, truths);
        const MetricsReport report_b = evaluate(cases_b);
        std::vector<SignificanceResult> results;
        const std::pair<const AspectMetrics*, const AspectMetrics*> aspects[] = {
            {&report.imprisonment, &report_b.imprisonment},
            {&report.probation, &report_b.probation},
            {&report.fine, &report_b.fine}};
        const char* names[] = {"imprisonment", "probation", "fine"};
        for (int i = 0; i < 3; ++i) {
            std::map<std::string, double> b_errors;
            for (const auto& [id, err] : aspects[i].second->per_case_errors) b_errors[id] = err;
            std::vector<double> a_vec, b_vec;
            for (const auto& [id, err] : aspects[i].first->per_case_errors) {
                const auto it = b_errors.find(id);
                if (it == b_errors.end()) continue;
                a_vec.push_back(err);
                b_vec.push_back(it->second);
            }
            if (a_vec.size() < 2) continue;  // not enough common pairs for a test
            results.push_back(significance(a_vec, b_vec, resamples, seed, names[i]));
        }
        text += render_significance(results, resamples, seed);
        significance_results = std::move(results);
    }

    std::cout << text;
    if (report_out) {
        jsonl::spit(*report_out, text);
        // structured JSON sidecar next to the text report
        fs::path json_path(*report_out);
        json_path.replace_extension(".json");
        jsonl::spit(json_path.string(), render_metrics_json(report, significance_results));
    }
    if (report_text_out) *report_text_out = text;
    return 0;
}

int cmd_aggregate(const std::string& annotations_path, const std::string& keys_path,
                  const std::optional<std::string>& catalog_path,
                  const std::optional<std::string>& report_out, std::string* report_text_out) {
    const AspectCatalog catalog =
        catalog_path ? AspectCatalog::load(*catalog_path) : AspectCatalog::builtin();
    const auto annotations = load_annotation_file(annotations_path);
    const auto keys = load_blinding_keys(keys_path);
    const AggregateResult result = aggregate(annotations, keys, catalog);
    std::string text = render_process_report(result, catalog);
    if (result.n_annotators >= 2) {
        try {
            char buf[64];
            std::snprintf(buf, sizeof(buf), "%.3f", average_kappa(annotations));
            text += "\naverage pairwise Cohen's kappa: " + std::string(buf) + "\n";
        } catch (const DegenerateMarginals&) {
            text += "\naverage pairwise Cohen's kappa: undefined (degenerate marginals)\n";
        }
    }
    std::cout << text;
    if (report_out) jsonl::spit(*report_out, text);
    if (report_text_out) *report_text_out = text;
    return 0;
}

int cmd_ingest(const std::string& document_path, const std::string& case_id,
               const std::string& charge_label, const RunConfig& config,
               const std::string& out_path) {
    const TemplateLibrary tpl = TemplateLibrary::load(config.templates_dir);
    const auto backend = make_backend(config);
    const std::string document = jsonl::slurp(document_path);

    CompletionRequest request;
    request.messages = {{"system", tpl.render("ingest_system", {})},
                        {"user", tpl.render("ingest", {{"document", document}})}};
    request.temperature = 0.0;
    request.max_tokens = config.agent.max_tokens;
    request.tag = {case_id, "Ingest", "Extractor", 0};
    const std::string response = backend->complete(request);

    // tolerate fenced JSON
    std::string body = response;
    if (const auto fence = body.find("```"); fence != std::string::npos) {
        const auto start = body.find('\n', fence);
        const auto end = body.find("```", start == std::string::npos ? fence + 3 : start);
        if (start != std::string::npos && end != std::string::npos) {
            body = body.substr(start + 1, end - start - 1);
        }
    }
    ordered_json j;
    try {
        j = ordered_json::parse(body);
    } catch (const std::exception&) {
        throw ExtractionIncomplete("extractor did not return JSON: " + response);
    }

    CaseMaterials c;
    c.case_id = case_id;
    c.charge_label = charge_label.empty() ? j.value("charge_label", std::string{}) : charge_label;
    c.defendant_info = j.value("defendant_info", std::string{});
    c.indictment = j.value("indictment", std::string{});
    int next_evidence = 1;
    for (const auto& je : j.value("evidence", ordered_json::array())) {
        EvidenceItem e;
        e.evidence_id = "e" + std::to_string(next_evidence++);
        e.title = je.value("title", std::string{});
        e.content = je.value("content", std::string{});
        const auto side = side_from_string(je.value("submitted_by", "prosecution"));
        e.submitted_by = side ? *side : PartySide::Prosecution;
        c.evidence.push_back(std::move(e));
    }

    std::vector<std::string> missing;
    if (zh::trim(c.defendant_info).empty()) missing.push_back("defendant_info");
    if (zh::trim(c.indictment).empty()) missing.push_back("indictment");
    if (c.evidence.empty()) missing.push_back("evidence");
    if (!missing.empty()) {
        std::string msg = "extraction incomplete, missing:";
        for (const auto& m : missing) msg += " " + m;
        throw ExtractionIncomplete(msg);
    }
    const auto violations = validate_case(c);
    if (!violations.empty()) {
        std::string msg = "extracted case fails validation:";
        for (const auto& v : violations) msg += " [" + v.field + "] " + v.rule + ";";
        throw ExtractionIncomplete(msg);
    }
    save_case_file(c, out_path);
    std::cerr << "ingest: wrote " << out_path
              << "; extraction is generation-assisted - review by a legal expert is expected\n";
    return 0;
}

}  // namespace courtsim
