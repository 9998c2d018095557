#include "courtsim/domain.hpp"

#include <fstream>
#include <set>
#include <sstream>

#include <nlohmann/json.hpp>

#include "courtsim/errors.hpp"
#include "courtsim/zh_text.hpp"

namespace courtsim {

using ordered_json = nlohmann::ordered_json;

std::string_view to_string(Role role) {
    switch (role) {
        case Role::Judge: return "Judge";
        case Role::Prosecutor: return "Prosecutor";
        case Role::Attorney: return "Attorney";
        case Role::Defendant: return "Defendant";
        case Role::Stenographer: return "Stenographer";
    }
    return "?";
}

std::string_view to_string(Stage stage) {
    switch (stage) {
        case Stage::TrialPreparation: return "TrialPreparation";
        case Stage::TrialInvestigation: return "TrialInvestigation";
        case Stage::EvidencePresentation: return "EvidencePresentation";
        case Stage::TrialDebate: return "TrialDebate";
        case Stage::FinalStatement: return "FinalStatement";
        case Stage::Concluded: return "Concluded";
    }
    return "?";
}

std::optional<Role> role_from_string(std::string_view s) {
    for (Role r : kAllRoles) {
        if (to_string(r) == s) return r;
    }
    return std::nullopt;
}

std::optional<Stage> stage_from_string(std::string_view s) {
    for (Stage st : kActiveStages) {
        if (to_string(st) == s) return st;
    }
    if (s == "Concluded") return Stage::Concluded;
    return std::nullopt;
}

Stage next_stage(Stage stage) {
    switch (stage) {
        case Stage::TrialPreparation: return Stage::TrialInvestigation;
        case Stage::TrialInvestigation: return Stage::EvidencePresentation;
        case Stage::EvidencePresentation: return Stage::TrialDebate;
        case Stage::TrialDebate: return Stage::FinalStatement;
        case Stage::FinalStatement: return Stage::Concluded;
        case Stage::Concluded: return Stage::Concluded;
    }
    return Stage::Concluded;
}

std::string_view to_string(PartySide side) {
    return side == PartySide::Prosecution ? "prosecution" : "defense";
}

std::optional<PartySide> side_from_string(std::string_view s) {
    if (s == "prosecution") return PartySide::Prosecution;
    if (s == "defense") return PartySide::Defense;
    return std::nullopt;
}

std::string_view to_string(SegmentKind kind) {
    switch (kind) {
        case SegmentKind::Canonical: return "canonical";
        case SegmentKind::Excursion: return "excursion";
        case SegmentKind::Resumed: return "resumed";
    }
    return "?";
}

std::optional<SegmentKind> segment_kind_from_string(std::string_view s) {
    if (s == "canonical") return SegmentKind::Canonical;
    if (s == "excursion") return SegmentKind::Excursion;
    if (s == "resumed") return SegmentKind::Resumed;
    return std::nullopt;
}

std::vector<Violation> validate_case(const CaseMaterials& c) {
    std::vector<Violation> out;
    if (c.case_id.empty()) {
        out.push_back({"case_id", "case_id must be non-empty"});
    }
    if (zh::trim(c.indictment).empty()) {
        out.push_back({"indictment", "indictment must be non-empty"});
    }
    std::set<std::string> seen;
    for (const auto& item : c.evidence) {
        if (item.evidence_id.empty()) {
            out.push_back({"evidence", "evidence_id must be non-empty (title: " + item.title + ")"});
            continue;
        }
        if (!seen.insert(item.evidence_id).second) {
            out.push_back({"evidence", "duplicate evidence_id: " + item.evidence_id});
        }
        if (zh::trim(item.title).empty()) {
            out.push_back({"evidence", "evidence title must be non-empty (id: " + item.evidence_id + ")"});
        }
    }
    return out;
}

namespace {

ordered_json case_to_ordered_json(const CaseMaterials& c) {
    ordered_json j;
    j["case_id"] = c.case_id;
    j["charge_label"] = c.charge_label;
    j["defendant_info"] = c.defendant_info;
    j["indictment"] = c.indictment;
    j["evidence"] = ordered_json::array();
    for (const auto& e : c.evidence) {
        ordered_json je;
        je["evidence_id"] = e.evidence_id;
        je["title"] = e.title;
        je["content"] = e.content;
        je["submitted_by"] = std::string(to_string(e.submitted_by));
        j["evidence"].push_back(std::move(je));
    }
    return j;
}

}  // namespace

std::string case_to_json(const CaseMaterials& c) {
    return case_to_ordered_json(c).dump(2) + "\n";
}

CaseMaterials case_from_json(const std::string& json_text) {
    ordered_json j;
    try {
        j = ordered_json::parse(json_text);
    } catch (const std::exception& e) {
        throw MalformedRecord(std::string("case file is not valid JSON: ") + e.what());
    }
    CaseMaterials c;
    try {
        c.case_id = j.at("case_id").get<std::string>();
        c.charge_label = j.value("charge_label", std::string{});
        c.defendant_info = j.value("defendant_info", std::string{});
        c.indictment = j.at("indictment").get<std::string>();
        for (const auto& je : j.value("evidence", ordered_json::array())) {
            EvidenceItem e;
            e.evidence_id = je.at("evidence_id").get<std::string>();
            e.title = je.at("title").get<std::string>();
            e.content = je.value("content", std::string{});
            const auto side = side_from_string(je.at("submitted_by").get<std::string>());
            if (!side) {
                throw MalformedRecord("evidence submitted_by must be prosecution or defense");
            }
            e.submitted_by = *side;
            c.evidence.push_back(std::move(e));
        }
    } catch (const MalformedRecord&) {
        throw;
    } catch (const std::exception& e) {
        throw MalformedRecord(std::string("case file missing required field: ") + e.what());
    }
    return c;
}

CaseMaterials load_case_file(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw MalformedRecord("cannot open case file: " + path);
    std::ostringstream ss;
    ss << in.rdbuf();
    return case_from_json(ss.str());
}

void save_case_file(const CaseMaterials& c, const std::string& path) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw ConfigError("cannot write case file: " + path);
    out << case_to_json(c);
}

std::map<Stage, std::pair<std::uint64_t, std::uint64_t>> TrialTranscript::stage_boundaries() const {
    std::map<Stage, std::pair<std::uint64_t, std::uint64_t>> out;
    for (const auto& seg : segments) {
        if (seg.kind != SegmentKind::Canonical || seg.empty) continue;
        out[seg.stage] = {seg.first_seq, seg.last_seq};
    }
    return out;
}

ImprisonmentTerm ImprisonmentTerm::of_months(long long m) {
    if (m < 0) throw InvalidCase("imprisonment months must be >= 0");
    return ImprisonmentTerm{Kind::Months, m};
}
ImprisonmentTerm ImprisonmentTerm::life() { return {Kind::LifeImprisonment, 0}; }
ImprisonmentTerm ImprisonmentTerm::death() { return {Kind::DeathPenalty, 0}; }
ImprisonmentTerm ImprisonmentTerm::no_custody() { return {Kind::NoCustody, 0}; }

std::string term_to_string(const ImprisonmentTerm& term) {
    switch (term.kind) {
        case ImprisonmentTerm::Kind::Months: return std::to_string(term.months);
        case ImprisonmentTerm::Kind::LifeImprisonment: return "无期徒刑";
        case ImprisonmentTerm::Kind::DeathPenalty: return "死刑";
        case ImprisonmentTerm::Kind::NoCustody: return "无";
    }
    return "无";
}

std::optional<ImprisonmentTerm> term_from_string(std::string_view s) {
    const std::string t = zh::trim(s);
    if (t == "无期徒刑") return ImprisonmentTerm::life();
    if (t == "死刑") return ImprisonmentTerm::death();
    if (t == "无") return ImprisonmentTerm::no_custody();
    if (t.empty()) return std::nullopt;
    for (char ch : t) {
        if (ch < '0' || ch > '9') return std::nullopt;
    }
    try {
        return ImprisonmentTerm::of_months(std::stoll(t));
    } catch (const std::exception&) {
        return std::nullopt;
    }
}

Judgment make_judgment(ImprisonmentTerm imprisonment, bool probation_applicable,
                       std::optional<long long> probation_months, bool fine_applicable,
                       std::optional<long long> fine_amount, std::string reasoning,
                       std::vector<CitedArticle> cited_articles) {
    if (probation_months && !probation_applicable) {
        throw InvalidCase("probation_months present without probation_applicable");
    }
    if (probation_months && *probation_months <= 0) {
        throw InvalidCase("probation_months must be positive");
    }
    if (fine_amount && !fine_applicable) {
        throw InvalidCase("fine_amount present without fine_applicable");
    }
    if (fine_amount && *fine_amount < 0) {
        throw InvalidCase("fine_amount must be >= 0");
    }
    Judgment j;
    j.imprisonment = imprisonment;
    j.probation_applicable = probation_applicable;
    j.probation_months = probation_months;
    j.fine_applicable = fine_applicable;
    j.fine_amount = fine_amount;
    j.reasoning = std::move(reasoning);
    j.cited_articles = std::move(cited_articles);
    return j;
}

}  // namespace courtsim
