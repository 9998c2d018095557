#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "courtsim/errors.hpp"
#include "courtsim/runner.hpp"

namespace {

// config file first, then command-line overrides
courtsim::RunConfig build_config(const std::string& config_path,
                                 const std::vector<std::string>& overrides) {
    courtsim::RunConfig config;
    if (!config_path.empty()) {
        config = courtsim::load_run_config(config_path);
    }
    for (const auto& kv : overrides) {
        const auto eq = kv.find('=');
        if (eq == std::string::npos) {
            throw courtsim::ConfigError("--set expects key=value, got: " + kv);
        }
        courtsim::apply_config_line(config, kv.substr(0, eq), kv.substr(eq + 1));
    }
    return config;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"courtroom trial simulation and judgment evaluation harness"};
    app.require_subcommand(1);

    std::string config_path;
    std::vector<std::string> overrides;
    app.add_option("--config", config_path, "run configuration file (key=value lines)");
    app.add_option("--set", overrides, "override a config key (key=value, repeatable)");

    // ingest
    auto* ingest = app.add_subcommand("ingest", "extract case materials from a raw case document");
    std::string ingest_doc, ingest_case_id, ingest_charge, ingest_out;
    ingest->add_option("--doc", ingest_doc, "raw case document (text)")->required();
    ingest->add_option("--case-id", ingest_case_id, "case id for the output file")->required();
    ingest->add_option("--charge", ingest_charge, "charge label");
    ingest->add_option("--out", ingest_out, "output case file (JSON)")->required();

    // simulate
    auto* simulate = app.add_subcommand("simulate", "run five-stage trials over case files");
    std::vector<std::string> case_files;
    std::string run_id;
    std::optional<int> parallelism;
    std::optional<std::string> backend_kind, output_dir;
    std::optional<std::uint64_t> seed;
    simulate->add_option("cases", case_files, "case input files (JSON)")->required();
    simulate->add_option("--run-id", run_id, "run identifier (run directories are append-only)")
        ->required();
    simulate->add_option("--parallelism", parallelism, "concurrent trials");
    simulate->add_option("--backend", backend_kind, "remote | scripted | replay");
    simulate->add_option("--out", output_dir, "output directory root");
    simulate->add_option("--seed", seed, "run seed");

    // evaluate-judgment
    auto* evaluate = app.add_subcommand("evaluate-judgment",
                                        "score prediction files against ground truth");
    std::string pred_path, truth_path;
    std::optional<std::string> pred_b_path, report_out;
    std::uint64_t eval_seed = 42;
    std::size_t resamples = 10000;
    evaluate->add_option("--predictions", pred_path, "prediction file (JSONL) or run directory")
        ->required();
    evaluate->add_option("--truth", truth_path, "truth file (JSONL)")->required();
    evaluate->add_option("--predictions-b", pred_b_path,
                         "second system's predictions; adds significance columns");
    evaluate->add_option("--out", report_out, "write the report to this file as well");
    evaluate->add_option("--seed", eval_seed, "permutation test seed");
    evaluate->add_option("--resamples", resamples, "permutation resamples");

    // aggregate-annotations
    auto* aggregate = app.add_subcommand("aggregate-annotations",
                                         "aggregate blinded pairwise annotations");
    std::string annotations_path, keys_path;
    std::optional<std::string> catalog_path, agg_out;
    aggregate->add_option("--annotations", annotations_path, "annotation CSV")->required();
    aggregate->add_option("--keys", keys_path, "blinding key file (JSON)")->required();
    aggregate->add_option("--catalog", catalog_path, "aspect catalog (JSON; default: built-in)");
    aggregate->add_option("--out", agg_out, "write the report to this file as well");

    CLI11_PARSE(app, argc, argv);

    try {
        courtsim::RunConfig config = build_config(config_path, overrides);
        if (ingest->parsed()) {
            return courtsim::cmd_ingest(ingest_doc, ingest_case_id, ingest_charge, config,
                                        ingest_out);
        }
        if (simulate->parsed()) {
            if (parallelism) config.parallelism = *parallelism;
            if (backend_kind) config.backend_kind = *backend_kind;
            if (output_dir) config.output_dir = *output_dir;
            if (seed) config.seed = *seed;
            return courtsim::cmd_simulate(case_files, config, run_id);
        }
        if (evaluate->parsed()) {
            return courtsim::cmd_evaluate(pred_path, truth_path, pred_b_path, report_out,
                                          eval_seed, resamples);
        }
        if (aggregate->parsed()) {
            return courtsim::cmd_aggregate(annotations_path, keys_path, catalog_path, agg_out);
        }
    } catch (const courtsim::Error& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 2;
    } catch (const std::exception& e) {
        std::cerr << "unexpected error: " << e.what() << "\n";
        return 2;
    }
    return 2;
}
