#include <fstream>

#include "courtsim/errors.hpp"
#include "courtsim/runner.hpp"
#include "courtsim/zh_text.hpp"

namespace courtsim {

namespace {

bool parse_bool(const std::string& value, const std::string& key) {
    if (value == "true" || value == "on" || value == "1") return true;
    if (value == "false" || value == "off" || value == "0") return false;
    throw ConfigError("config key " + key + " expects a boolean, got: " + value);
}

long long parse_int(const std::string& value, const std::string& key) {
    try {
        std::size_t used = 0;
        const long long v = std::stoll(value, &used);
        if (used != value.size()) throw std::invalid_argument(value);
        return v;
    } catch (const std::exception&) {
        throw ConfigError("config key " + key + " expects an integer, got: " + value);
    }
}

}  // namespace

void apply_config_line(RunConfig& config, const std::string& key, const std::string& value) {
    if (key == "investigation_qa_pairs") {
        config.procedure.investigation_qa_pairs = static_cast<int>(parse_int(value, key));
    } else if (key == "judge_questioning") {
        config.procedure.judge_questioning = parse_bool(value, key);
    } else if (key == "debate_rounds") {
        config.procedure.debate_rounds = static_cast<int>(parse_int(value, key));
    } else if (key == "judge_interjection") {
        config.procedure.judge_interjection = parse_bool(value, key);
    } else if (key == "backtrack_budget") {
        config.procedure.backtrack_budget = static_cast<int>(parse_int(value, key));
    } else if (key == "templates_dir") {
        config.templates_dir = value;
    } else if (key == "law_corpus") {
        config.law_corpus_path = value;
    } else if (key == "law_aliases") {
        config.alias_path = value;
    } else if (key == "case_corpus") {
        config.case_corpus_path = value;
    } else if (key == "output_dir") {
        config.output_dir = value;
    } else if (key == "parallelism") {
        config.parallelism = static_cast<int>(parse_int(value, key));
    } else if (key == "seed") {
        config.seed = static_cast<std::uint64_t>(parse_int(value, key));
    } else if (key == "backend") {
        config.backend_kind = value;
    } else if (key == "fixture_path") {
        config.fixture_path = value;
    } else if (key == "scripted_strict") {
        config.scripted_strict = parse_bool(value, key);
    } else if (key == "cassette_path") {
        config.cassette_path = value;
    } else if (key == "record") {
        config.record = parse_bool(value, key);
    } else if (key == "endpoint") {
        config.remote.endpoint = value;
    } else if (key == "completion_path") {
        config.remote.completion_path = value;
    } else if (key == "model") {
        config.remote.model = value;
    } else if (key == "api_key_env") {
        config.remote.api_key_env = value;
    } else if (key == "timeout_ms") {
        config.remote.timeout_ms = static_cast<int>(parse_int(value, key));
    } else if (key == "max_retries") {
        config.remote.max_retries = static_cast<int>(parse_int(value, key));
    } else if (key == "backoff_base_ms") {
        config.remote.backoff_base_ms = static_cast<int>(parse_int(value, key));
    } else if (key == "min_request_interval_ms") {
        config.remote.min_request_interval_ms = static_cast<int>(parse_int(value, key));
    } else if (key == "temperature") {
        config.agent.temperature = std::stod(value);
    } else if (key == "judge_verdict_temperature") {
        config.agent.judge_verdict_temperature = std::stod(value);
    } else if (key == "max_tokens") {
        config.agent.max_tokens = static_cast<int>(parse_int(value, key));
    } else {
        throw ConfigError("unknown config key: " + key);
    }
}

RunConfig load_run_config(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw ConfigError("cannot open config file: " + path);
    RunConfig config;
    std::string line;
    std::size_t lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        const std::string t = zh::trim(line);
        if (t.empty() || t[0] == '#') continue;
        const auto eq = t.find('=');
        if (eq == std::string::npos) {
            throw ConfigError(path + ":" + std::to_string(lineno) + ": expected key=value");
        }
        apply_config_line(config, zh::trim(t.substr(0, eq)), zh::trim(t.substr(eq + 1)));
    }
    if (config.parallelism < 1) throw ConfigError("parallelism must be >= 1");
    if (config.procedure.debate_rounds < 1) throw ConfigError("debate_rounds must be >= 1");
    return config;
}

std::shared_ptr<Backend> make_backend(const RunConfig& config) {
    std::shared_ptr<Backend> base;
    if (config.backend_kind == "remote") {
        base = std::make_shared<RemoteBackend>(config.remote);
    } else if (config.backend_kind == "scripted") {
        std::map<std::string, std::string> fixtures;
        if (!config.fixture_path.empty()) {
            fixtures = ScriptedBackend::load_fixture_file(config.fixture_path);
        }
        base = std::make_shared<ScriptedBackend>(
            std::move(fixtures), config.scripted_strict,
            config.scripted_strict ? ScriptedBackend::Fallback{} : make_synthetic_responder());
    } else if (config.backend_kind == "replay") {
        if (config.cassette_path.empty()) {
            throw ConfigError("replay backend requires cassette_path");
        }
        return std::make_shared<CassetteBackend>(nullptr, config.cassette_path,
                                                 CassetteMode::Replay);
    } else {
        throw ConfigError("unknown backend kind: " + config.backend_kind);
    }
    if (config.record) {
        if (config.cassette_path.empty()) {
            throw ConfigError("record mode requires cassette_path");
        }
        return std::make_shared<CassetteBackend>(base, config.cassette_path, CassetteMode::Record);
    }
    return base;
}

}  // namespace courtsim
