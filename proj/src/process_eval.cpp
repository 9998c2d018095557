#include "courtsim/process_eval.hpp"

#include <algorithm>
#include <cstdio>
#include <fstream>
#include <set>
#include <sstream>

#include <nlohmann/json.hpp>

#include "courtsim/errors.hpp"
#include "courtsim/jsonl.hpp"
#include "courtsim/zh_text.hpp"

namespace courtsim {

using ordered_json = nlohmann::ordered_json;

std::string_view to_string(AspectStage stage) {
    switch (stage) {
        case AspectStage::TrialInvestigation: return "TrialInvestigation";
        case AspectStage::EvidencePresentation: return "EvidencePresentation";
        case AspectStage::TrialDebate: return "TrialDebate";
        case AspectStage::Overall: return "Overall";
    }
    return "?";
}

std::optional<AspectStage> aspect_stage_from_string(std::string_view s) {
    if (s == "TrialInvestigation") return AspectStage::TrialInvestigation;
    if (s == "EvidencePresentation") return AspectStage::EvidencePresentation;
    if (s == "TrialDebate") return AspectStage::TrialDebate;
    if (s == "Overall") return AspectStage::Overall;
    return std::nullopt;
}

std::string_view to_string(Preference p) {
    switch (p) {
        case Preference::First: return "First";
        case Preference::Second: return "Second";
        case Preference::Draw: return "Draw";
    }
    return "?";
}

std::optional<Preference> preference_from_string(std::string_view s) {
    if (s == "First") return Preference::First;
    if (s == "Second") return Preference::Second;
    if (s == "Draw") return Preference::Draw;
    return std::nullopt;
}

namespace {

struct BuiltinAspect {
    const char* id;
    AspectStage stage;
    Role role;
    const char* name;
};

const BuiltinAspect kBuiltinAspects[] = {
    {"inv-judge-1", AspectStage::TrialInvestigation, Role::Judge, "Clarity of Questioning Structure"},
    {"inv-judge-2", AspectStage::TrialInvestigation, Role::Judge, "Neutrality and Procedural Control"},
    {"inv-judge-3", AspectStage::TrialInvestigation, Role::Judge, "Professional Evidence Examination"},
    {"inv-prosecutor-1", AspectStage::TrialInvestigation, Role::Prosecutor, "Proper Questioning Strategy"},
    {"inv-prosecutor-2", AspectStage::TrialInvestigation, Role::Prosecutor, "Precise Legal Terminology"},
    {"inv-prosecutor-3", AspectStage::TrialInvestigation, Role::Prosecutor, "Lawful Prosecutorial Questioning"},
    {"inv-attorney-1", AspectStage::TrialInvestigation, Role::Attorney, "Relevance and Precision in Questioning"},
    {"inv-attorney-2", AspectStage::TrialInvestigation, Role::Attorney, "Awareness of Procedural Legitimacy"},
    {"inv-attorney-3", AspectStage::TrialInvestigation, Role::Attorney, "Awareness of Defendant’s Rights"},
    {"evi-judge-1", AspectStage::EvidencePresentation, Role::Judge, "Normative Conduct"},
    {"evi-judge-2", AspectStage::EvidencePresentation, Role::Judge, "Cross-Exam Legality Control"},
    {"evi-judge-3", AspectStage::EvidencePresentation, Role::Judge, "Awareness of Fair Trial Safeguards"},
    {"evi-prosecutor-1", AspectStage::EvidencePresentation, Role::Prosecutor, "Accuracy in Evidence Presentation"},
    {"evi-prosecutor-2", AspectStage::EvidencePresentation, Role::Prosecutor, "Moderation in Aggressive Advocacy"},
    {"evi-prosecutor-3", AspectStage::EvidencePresentation, Role::Prosecutor, "Proper Response to Objections"},
    {"evi-attorney-1", AspectStage::EvidencePresentation, Role::Attorney, "Precision in Challenging Key Issues"},
    {"evi-attorney-2", AspectStage::EvidencePresentation, Role::Attorney, "Rigor in Evidence Analysis"},
    {"evi-attorney-3", AspectStage::EvidencePresentation, Role::Attorney, "Effectiveness in Evidence Rebuttal"},
    {"deb-judge-1", AspectStage::TrialDebate, Role::Judge, "Clear Adversarial Framing"},
    {"deb-judge-2", AspectStage::TrialDebate, Role::Judge, "Impartial Verbal Interventions"},
    {"deb-judge-3", AspectStage::TrialDebate, Role::Judge, "Pace and Order Control"},
    {"deb-prosecutor-1", AspectStage::TrialDebate, Role::Prosecutor, "Logical Coherence of Accusation"},
    {"deb-prosecutor-2", AspectStage::TrialDebate, Role::Prosecutor, "Accuracy in Legal Citation"},
    {"deb-prosecutor-3", AspectStage::TrialDebate, Role::Prosecutor, "Effective Defense Rebuttal"},
    {"deb-attorney-1", AspectStage::TrialDebate, Role::Attorney, "Clarity of Defense Arguments"},
    {"deb-attorney-2", AspectStage::TrialDebate, Role::Attorney, "Logical Rigor in Legal Reasoning"},
    {"deb-attorney-3", AspectStage::TrialDebate, Role::Attorney, "Balanced Legal and Emotional Appeal"},
    {"overall-judge", AspectStage::Overall, Role::Judge, "Judge"},
    {"overall-prosecutor", AspectStage::Overall, Role::Prosecutor, "Prosecutor"},
    {"overall-attorney", AspectStage::Overall, Role::Attorney, "Attorney"},
};

}  // namespace

AspectCatalog AspectCatalog::builtin() {
    AspectCatalog catalog;
    for (const auto& a : kBuiltinAspects) {
        catalog.entries_.push_back({a.id, a.stage, a.role, a.name});
    }
    catalog.validate();
    return catalog;
}

AspectCatalog AspectCatalog::load(const std::string& path) {
    ordered_json j;
    try {
        j = ordered_json::parse(jsonl::slurp(path));
    } catch (const std::exception& e) {
        throw MalformedRecord(path + ": " + e.what());
    }
    AspectCatalog catalog;
    for (const auto& je : j.at("aspects")) {
        AspectEntry e;
        e.aspect_id = je.at("aspect_id").get<std::string>();
        const auto stage = aspect_stage_from_string(je.at("stage").get<std::string>());
        const auto role = role_from_string(je.at("role").get<std::string>());
        if (!stage || !role) throw MalformedRecord(path + ": bad stage/role in " + e.aspect_id);
        e.stage = *stage;
        e.role = *role;
        e.name = je.at("name").get<std::string>();
        catalog.entries_.push_back(std::move(e));
    }
    catalog.validate();
    return catalog;
}

void AspectCatalog::validate() const {
    if (entries_.size() != 30) {
        throw ConfigError("aspect catalog must have exactly 30 entries, got " +
                          std::to_string(entries_.size()));
    }
    std::map<std::pair<AspectStage, Role>, int> group_counts;
    std::set<std::string> ids;
    for (const auto& e : entries_) {
        if (!ids.insert(e.aspect_id).second) {
            throw ConfigError("duplicate aspect_id: " + e.aspect_id);
        }
        ++group_counts[{e.stage, e.role}];
    }
    int overall = 0;
    for (const auto& [key, count] : group_counts) {
        if (key.first == AspectStage::Overall) {
            if (count != 1) throw ConfigError("each Overall role must appear exactly once");
            ++overall;
        } else if (count != 3) {
            throw ConfigError("each stage/role group must have exactly 3 aspects");
        }
    }
    if (overall != 3) throw ConfigError("catalog must have 3 Overall entries");
}

const AspectEntry* AspectCatalog::find(const std::string& aspect_id) const {
    for (const auto& e : entries_) {
        if (e.aspect_id == aspect_id) return &e;
    }
    return nullptr;
}

namespace {

inline std::uint64_t splitmix64_next(std::uint64_t& state) {
    state += 0x9E3779B97F4A7C15ULL;
    std::uint64_t z = state;
    z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
    z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
    return z ^ (z >> 31);
}

std::string pair_id_for(std::size_t index) {
    char buf[16];
    std::snprintf(buf, sizeof(buf), "pair_%03zu", index + 1);
    return buf;
}

}  // namespace

PairingResult make_pairs(const std::vector<std::string>& sim_records,
                         const std::vector<std::string>& human_records, std::uint64_t seed) {
    if (sim_records.size() != human_records.size()) {
        throw LengthMismatch("make_pairs: sim and human record lists differ in length");
    }
    PairingResult out;
    std::uint64_t state = seed;
    for (std::size_t i = 0; i < sim_records.size(); ++i) {
        const bool sim_first = (splitmix64_next(state) & 1ULL) != 0;
        EvaluationPair p;
        p.pair_id = pair_id_for(i);
        p.record_first = sim_first ? sim_records[i] : human_records[i];
        p.record_second = sim_first ? human_records[i] : sim_records[i];
        out.keys[p.pair_id] = sim_first;
        out.pairs.push_back(std::move(p));
    }
    return out;
}

Outcome majority_outcome(const std::vector<Outcome>& votes) {
    std::size_t sim = 0, human = 0;
    for (const Outcome v : votes) {
        if (v == Outcome::Sim) ++sim;
        if (v == Outcome::Human) ++human;
    }
    if (sim > human) return Outcome::Sim;
    if (human > sim) return Outcome::Human;
    return Outcome::Draw;
}

AggregateResult aggregate(const std::vector<AnnotationRecord>& annotations,
                          const BlindingKeys& keys, const AspectCatalog& catalog) {
    // index annotations and collect the annotator roster
    std::map<std::tuple<std::string, std::string, std::string>, Preference> index;
    std::set<std::string> annotators;
    for (const auto& a : annotations) {
        if (!keys.count(a.pair_id)) {
            throw MissingAnnotation("annotation references unknown pair: " + a.pair_id);
        }
        if (!catalog.find(a.aspect_id)) {
            throw MissingAnnotation("annotation references unknown aspect: " + a.aspect_id);
        }
        const auto key = std::make_tuple(a.pair_id, a.aspect_id, a.annotator_id);
        if (index.count(key)) {
            throw MissingAnnotation("duplicate annotation for (" + a.pair_id + ", " + a.aspect_id +
                                    ", " + a.annotator_id + ")");
        }
        index.emplace(key, a.preference);
        annotators.insert(a.annotator_id);
    }
    if (annotators.empty()) throw MissingAnnotation("no annotations given");

    AggregateResult result;
    result.n_pairs = keys.size();
    result.n_annotators = annotators.size();
    for (const auto& aspect : catalog.entries()) {
        std::size_t sim = 0, draw = 0, human = 0;
        for (const auto& [pair_id, sim_is_first] : keys) {
            std::vector<Outcome> votes;
            for (const auto& annotator : annotators) {
                const auto it = index.find(std::make_tuple(pair_id, aspect.aspect_id, annotator));
                if (it == index.end()) {
                    throw MissingAnnotation("missing annotation for (" + pair_id + ", " +
                                            aspect.aspect_id + ", " + annotator + ")");
                }
                switch (it->second) {
                    case Preference::Draw:
                        votes.push_back(Outcome::Draw);
                        break;
                    case Preference::First:
                        votes.push_back(sim_is_first ? Outcome::Sim : Outcome::Human);
                        break;
                    case Preference::Second:
                        votes.push_back(sim_is_first ? Outcome::Human : Outcome::Sim);
                        break;
                }
            }
            switch (majority_outcome(votes)) {
                case Outcome::Sim: ++sim; break;
                case Outcome::Draw: ++draw; break;
                case Outcome::Human: ++human; break;
            }
        }
        const double n = static_cast<double>(result.n_pairs);
        result.rows.push_back({aspect.aspect_id, sim / n, draw / n, human / n});
    }
    return result;
}

double cohen_kappa(const std::vector<Preference>& a, const std::vector<Preference>& b) {
    if (a.size() != b.size()) throw LengthMismatch("cohen_kappa: label vectors differ in length");
    if (a.empty()) throw LengthMismatch("cohen_kappa: empty label vectors");
    const double n = static_cast<double>(a.size());
    double agree = 0.0;
    double count_a[3] = {0, 0, 0};
    double count_b[3] = {0, 0, 0};
    for (std::size_t i = 0; i < a.size(); ++i) {
        if (a[i] == b[i]) ++agree;
        ++count_a[static_cast<int>(a[i])];
        ++count_b[static_cast<int>(b[i])];
    }
    const double po = agree / n;
    double pe = 0.0;
    for (int c = 0; c < 3; ++c) pe += (count_a[c] / n) * (count_b[c] / n);
    if (pe == 1.0) {
        if (po == 1.0) {
            throw DegenerateMarginals("cohen_kappa undefined: both annotators constant and equal");
        }
        // unreachable: pe can only be 1 when both marginals are the same
        // point mass, which forces po == 1
        throw DegenerateMarginals("cohen_kappa undefined: chance agreement is 1");
    }
    return (po - pe) / (1.0 - pe);
}

double average_kappa(const std::vector<AnnotationRecord>& annotations) {
    // label vectors per annotator over the sorted (pair, aspect) grid
    std::set<std::pair<std::string, std::string>> grid;
    std::set<std::string> annotators;
    std::map<std::tuple<std::string, std::string, std::string>, Preference> index;
    for (const auto& a : annotations) {
        grid.insert({a.pair_id, a.aspect_id});
        annotators.insert(a.annotator_id);
        index[{a.pair_id, a.aspect_id, a.annotator_id}] = a.preference;
    }
    if (annotators.size() < 2) throw LengthMismatch("average_kappa: need at least 2 annotators");

    std::map<std::string, std::vector<Preference>> labels;
    for (const auto& [pair_id, aspect_id] : grid) {
        for (const auto& annotator : annotators) {
            const auto it = index.find({pair_id, aspect_id, annotator});
            if (it == index.end()) {
                throw MissingAnnotation("missing annotation for (" + pair_id + ", " + aspect_id +
                                        ", " + annotator + ")");
            }
            labels[annotator].push_back(it->second);
        }
    }
    std::vector<std::string> names(annotators.begin(), annotators.end());
    double sum = 0.0;
    std::size_t pairs = 0;
    for (std::size_t i = 0; i < names.size(); ++i) {
        for (std::size_t j = i + 1; j < names.size(); ++j) {
            sum += cohen_kappa(labels[names[i]], labels[names[j]]);
            ++pairs;
        }
    }
    return sum / static_cast<double>(pairs);
}

namespace {

std::string format2(double v) {
    char buf[32];
    std::snprintf(buf, sizeof(buf), "%.2f", v);
    return buf;
}

std::string group_heading(AspectStage stage, Role role) {
    if (stage == AspectStage::Overall) return "[Overall Performance]";
    std::string s;
    switch (stage) {
        case AspectStage::TrialInvestigation: s = "Trial Investigation"; break;
        case AspectStage::EvidencePresentation: s = "Evidence Presentation"; break;
        case AspectStage::TrialDebate: s = "Trial Debate"; break;
        case AspectStage::Overall: break;
    }
    return "[" + s + " - " + std::string(to_string(role)) + "]";
}

}  // namespace

std::string render_process_report(const AggregateResult& result, const AspectCatalog& catalog) {
    std::string out;
    out += "Trial Process Evaluation Report\n";
    out += "pairs: " + std::to_string(result.n_pairs) +
           "  annotators: " + std::to_string(result.n_annotators) + "\n\n";
    char header[128];
    std::snprintf(header, sizeof(header), "%-44s  %5s  %5s  %5s\n", "aspect", "Sim.", "Draw", "Hum.");
    out += header;

    std::string current_group;
    for (std::size_t i = 0; i < catalog.entries().size(); ++i) {
        const auto& aspect = catalog.entries()[i];
        const auto& row = result.rows[i];
        const std::string group = group_heading(aspect.stage, aspect.role);
        if (group != current_group) {
            out += group + "\n";
            current_group = group;
        }
        char line[160];
        std::snprintf(line, sizeof(line), "%-44s  %5s  %5s  %5s\n", aspect.name.c_str(),
                      format2(row.sim_fraction).c_str(), format2(row.draw_fraction).c_str(),
                      format2(row.human_fraction).c_str());
        out += line;
    }
    return out;
}

std::vector<AnnotationRecord> load_annotation_file(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw MalformedRecord("cannot open annotation file: " + path);
    std::vector<AnnotationRecord> out;
    std::string line;
    std::size_t lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        const std::string t = zh::trim(line);
        if (t.empty()) continue;
        if (lineno == 1 && t == "pair_id,aspect_id,annotator_id,preference") continue;
        std::vector<std::string> fields;
        std::istringstream ss(t);
        std::string field;
        while (std::getline(ss, field, ',')) fields.push_back(zh::trim(field));
        if (fields.size() != 4) {
            throw MalformedRecord(path + ":" + std::to_string(lineno) + ": expected 4 fields");
        }
        const auto pref = preference_from_string(fields[3]);
        if (!pref) {
            throw MalformedRecord(path + ":" + std::to_string(lineno) +
                                  ": preference must be First/Second/Draw");
        }
        out.push_back({fields[0], fields[1], fields[2], *pref});
    }
    return out;
}

BlindingKeys load_blinding_keys(const std::string& path) {
    ordered_json j;
    try {
        j = ordered_json::parse(jsonl::slurp(path));
    } catch (const std::exception& e) {
        throw MalformedRecord(path + ": " + e.what());
    }
    BlindingKeys keys;
    for (const auto& [pair_id, position] : j.at("keys").items()) {
        const auto pos = position.get<std::string>();
        if (pos != "First" && pos != "Second") {
            throw MalformedRecord(path + ": key position must be First or Second");
        }
        keys[pair_id] = pos == "First";
    }
    return keys;
}

void save_blinding_keys(const BlindingKeys& keys, const std::string& path) {
    ordered_json j;
    j["_warning"] =
        "UNBLINDING KEY: positions of the simulated records. Keep away from annotators.";
    j["keys"] = ordered_json::object();
    for (const auto& [pair_id, sim_is_first] : keys) {
        j["keys"][pair_id] = sim_is_first ? "First" : "Second";
    }
    jsonl::spit(path, j.dump(2) + "\n");
}

void save_pairs_file(const std::vector<EvaluationPair>& pairs, const std::string& path) {
    ordered_json j = ordered_json::array();
    for (const auto& p : pairs) {
        ordered_json jp;
        jp["pair_id"] = p.pair_id;
        jp["record_first"] = p.record_first;
        jp["record_second"] = p.record_second;
        j.push_back(std::move(jp));
    }
    jsonl::spit(path, j.dump(2) + "\n");
}

}  // namespace courtsim
