#pragma once

#include <cstdint>
#include <map>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "courtsim/agent.hpp"
#include "courtsim/backend.hpp"
#include "courtsim/procedure.hpp"
#include "courtsim/retrieval.hpp"

namespace courtsim {

// ---------------------------------------------------------------------------
// Run configuration (single key=value file; see README)

struct RunConfig {
    ProcedureConfig procedure;
    std::string templates_dir = "assets/templates";
    std::string law_corpus_path;
    std::string alias_path;
    std::string case_corpus_path;
    std::string output_dir = "runs";
    int parallelism = 1;
    std::uint64_t seed = 42;

    std::string backend_kind = "scripted";  // remote | scripted | replay
    std::string fixture_path;               // scripted backend, optional
    bool scripted_strict = false;
    std::string cassette_path;  // replay input / record output
    bool record = false;        // wrap the backend with a recording cassette
    RemoteConfig remote;

    AgentOptions agent;
};

RunConfig load_run_config(const std::string& path);
void apply_config_line(RunConfig& config, const std::string& key, const std::string& value);

/// Builds the configured backend stack (remote/scripted, optionally wrapped
/// in a cassette).
std::shared_ptr<Backend> make_backend(const RunConfig& config);

// ---------------------------------------------------------------------------
// Single-trial runner

struct TrialResult {
    TrialTranscript transcript;
    Judgment judgment;
    std::string judgment_document;
    std::vector<std::string> warnings;
};

/// Runs one full five-stage trial: strategy initialization, scripted turns,
/// end-of-segment reflections for every non-stenographer agent, the optional
/// judge-initiated backtrack, and judgment drafting.
TrialResult run_trial(const CaseMaterials& trial_case, const RunConfig& config, Backend& backend,
                      const LawCorpus* law, const CaseCorpus* cases, const TemplateLibrary& tpl,
                      std::string* stage_reached = nullptr);

// ---------------------------------------------------------------------------
// Batch commands (exit codes: 0 ok, 1 partial case failures, 2 config error)

struct CaseStatus {
    std::string case_id;
    bool ok = false;
    std::string error;
    std::string stage_reached;
    double timing_ms = 0.0;
    std::vector<std::string> outputs;
};

struct RunManifest {
    std::string run_id;
    std::vector<CaseStatus> cases;
};

int cmd_simulate(const std::vector<std::string>& case_paths, const RunConfig& config,
                 const std::string& run_id);

int cmd_evaluate(const std::string& predictions_path, const std::string& truth_path,
                 const std::optional<std::string>& predictions_b_path,
                 const std::optional<std::string>& report_out, std::uint64_t seed,
                 std::size_t resamples, std::string* report_text_out = nullptr);

int cmd_aggregate(const std::string& annotations_path, const std::string& keys_path,
                  const std::optional<std::string>& catalog_path,
                  const std::optional<std::string>& report_out,
                  std::string* report_text_out = nullptr);

int cmd_ingest(const std::string& document_path, const std::string& case_id,
               const std::string& charge_label, const RunConfig& config,
               const std::string& out_path);

/// Collects predictions from a simulate run directory (case_*_judgment.json).
std::string predictions_from_run_dir(const std::string& run_dir);

}  // namespace courtsim
