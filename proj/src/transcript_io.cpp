#include <sstream>

#include <nlohmann/json.hpp>

#include "courtsim/errors.hpp"
#include "courtsim/jsonl.hpp"
#include "courtsim/procedure.hpp"

namespace courtsim {

using ordered_json = nlohmann::ordered_json;

namespace {

ordered_json config_to_json(const ProcedureConfig& config) {
    ordered_json j;
    j["investigation_qa_pairs"] = config.investigation_qa_pairs;
    j["judge_questioning"] = config.judge_questioning;
    j["debate_rounds"] = config.debate_rounds;
    j["judge_interjection"] = config.judge_interjection;
    j["backtrack_budget"] = config.backtrack_budget;
    return j;
}

ProcedureConfig config_from_json(const ordered_json& j) {
    ProcedureConfig config;
    config.investigation_qa_pairs = j.at("investigation_qa_pairs").get<int>();
    config.judge_questioning = j.at("judge_questioning").get<bool>();
    config.debate_rounds = j.at("debate_rounds").get<int>();
    config.judge_interjection = j.at("judge_interjection").get<bool>();
    config.backtrack_budget = j.at("backtrack_budget").get<int>();
    return config;
}

}  // namespace

std::string transcript_to_jsonl(const TrialTranscript& t, const ProcedureConfig& config) {
    std::ostringstream out;
    {
        ordered_json meta;
        meta["type"] = "meta";
        meta["case_id"] = t.case_id;
        meta["config"] = config_to_json(config);
        meta["evidence"] = ordered_json::array();
        for (const auto& [id, side] : t.evidence_manifest) {
            meta["evidence"].push_back({{"id", id}, {"side", std::string(to_string(side))}});
        }
        out << meta.dump() << "\n";
    }
    for (std::size_t i = 0; i < t.segments.size(); ++i) {
        const auto& seg = t.segments[i];
        if (!seg.empty) {
            for (std::uint64_t s = seg.first_seq; s <= seg.last_seq && s < t.utterances.size();
                 ++s) {
                const auto& u = t.utterances[s];
                ordered_json j;
                j["type"] = "utterance";
                j["seq"] = u.seq;
                j["stage"] = std::string(to_string(u.stage));
                j["segment"] = i;
                j["role"] = std::string(to_string(u.role));
                j["kind"] = u.directive_kind;
                j["text"] = u.text;
                out << j.dump() << "\n";
            }
        }
        for (const auto& ev : t.reflection_events) {
            if (ev.segment_index != i) continue;
            ordered_json j;
            j["type"] = "reflection";
            j["stage"] = std::string(to_string(ev.stage));
            j["segment"] = i;
            j["role"] = std::string(to_string(ev.role));
            out << j.dump() << "\n";
        }
        ordered_json j;
        j["type"] = "segment";
        j["index"] = i;
        j["stage"] = std::string(to_string(seg.stage));
        j["kind"] = std::string(to_string(seg.kind));
        j["empty"] = seg.empty;
        if (!seg.empty) {
            j["first_seq"] = seg.first_seq;
            j["last_seq"] = seg.last_seq;
        }
        out << j.dump() << "\n";
    }
    return out.str();
}

TrialTranscript transcript_from_jsonl(const std::string& text, ProcedureConfig* config_out) {
    TrialTranscript t;
    std::istringstream in(text);
    std::string line;
    std::size_t lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        if (line.empty()) continue;
        ordered_json j;
        try {
            j = ordered_json::parse(line);
        } catch (const std::exception& e) {
            throw MalformedRecord("transcript line " + std::to_string(lineno) + ": " + e.what());
        }
        const auto type = j.at("type").get<std::string>();
        try {
            if (type == "meta") {
                t.case_id = j.at("case_id").get<std::string>();
                if (config_out) *config_out = config_from_json(j.at("config"));
                for (const auto& je : j.value("evidence", ordered_json::array())) {
                    const auto side = side_from_string(je.at("side").get<std::string>());
                    if (!side) throw MalformedRecord("bad evidence side");
                    t.evidence_manifest.emplace_back(je.at("id").get<std::string>(), *side);
                }
            } else if (type == "utterance") {
                Utterance u;
                u.seq = j.at("seq").get<std::uint64_t>();
                const auto stage = stage_from_string(j.at("stage").get<std::string>());
                const auto role = role_from_string(j.at("role").get<std::string>());
                if (!stage || !role) throw MalformedRecord("bad stage/role");
                u.stage = *stage;
                u.role = *role;
                u.directive_kind = j.at("kind").get<std::string>();
                u.text = j.at("text").get<std::string>();
                t.utterances.push_back(std::move(u));
            } else if (type == "reflection") {
                ReflectionEvent ev;
                const auto stage = stage_from_string(j.at("stage").get<std::string>());
                const auto role = role_from_string(j.at("role").get<std::string>());
                if (!stage || !role) throw MalformedRecord("bad stage/role");
                ev.stage = *stage;
                ev.role = *role;
                ev.segment_index = j.at("segment").get<std::size_t>();
                t.reflection_events.push_back(ev);
            } else if (type == "segment") {
                StageSegment seg;
                const auto stage = stage_from_string(j.at("stage").get<std::string>());
                const auto kind = segment_kind_from_string(j.at("kind").get<std::string>());
                if (!stage || !kind) throw MalformedRecord("bad stage/kind");
                seg.stage = *stage;
                seg.kind = *kind;
                seg.empty = j.at("empty").get<bool>();
                if (!seg.empty) {
                    seg.first_seq = j.at("first_seq").get<std::uint64_t>();
                    seg.last_seq = j.at("last_seq").get<std::uint64_t>();
                }
                t.segments.push_back(seg);
            } else {
                throw MalformedRecord("unknown record type: " + type);
            }
        } catch (const MalformedRecord&) {
            throw;
        } catch (const std::exception& e) {
            throw MalformedRecord("transcript line " + std::to_string(lineno) + ": " + e.what());
        }
    }
    return t;
}

TrialTranscript load_transcript_file(const std::string& path, ProcedureConfig* config_out) {
    return transcript_from_jsonl(jsonl::slurp(path), config_out);
}

}  // namespace courtsim
