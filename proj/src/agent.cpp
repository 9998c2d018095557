#include "courtsim/agent.hpp"

#include <algorithm>
#include <filesystem>
#include <sstream>

#include <nlohmann/json.hpp>

#include "courtsim/errors.hpp"
#include "courtsim/jsonl.hpp"
#include "courtsim/verdict.hpp"
#include "courtsim/zh_text.hpp"

namespace courtsim {

namespace fs = std::filesystem;
using ordered_json = nlohmann::ordered_json;

// ---------------------------------------------------------------------------
// TemplateLibrary

TemplateLibrary TemplateLibrary::load(const std::string& dir) {
    TemplateLibrary lib;
    if (!fs::is_directory(dir)) {
        throw ConfigError("template directory not found: " + dir);
    }
    for (const auto& entry : fs::directory_iterator(dir)) {
        if (!entry.is_regular_file()) continue;
        const auto path = entry.path();
        if (path.extension() == ".txt") {
            lib.templates_[path.stem().string()] = jsonl::slurp(path.string());
        }
    }
    const auto tasks_path = fs::path(dir) / "tasks.json";
    if (!fs::exists(tasks_path)) {
        throw ConfigError("template directory missing tasks.json: " + dir);
    }
    ordered_json j;
    try {
        j = ordered_json::parse(jsonl::slurp(tasks_path.string()));
    } catch (const std::exception& e) {
        throw MalformedRecord(tasks_path.string() + ": " + e.what());
    }
    for (const auto& [role_name, spec] : j.items()) {
        if (!role_from_string(role_name)) {
            throw MalformedRecord("tasks.json: unknown role " + role_name);
        }
        lib.tasks_[role_name + "|base"] = spec.at("base").get<std::string>();
        for (const auto& [stage_name, text] : spec.at("stages").items()) {
            if (!stage_from_string(stage_name)) {
                throw MalformedRecord("tasks.json: unknown stage " + stage_name);
            }
            lib.tasks_[role_name + "|" + stage_name] = text.get<std::string>();
        }
    }
    return lib;
}

std::string TemplateLibrary::render(const std::string& name,
                                    const std::map<std::string, std::string>& vars) const {
    std::string out = raw(name);
    for (const auto& [key, value] : vars) {
        const std::string placeholder = "{{" + key + "}}";
        std::size_t at = 0;
        while ((at = out.find(placeholder, at)) != std::string::npos) {
            out.replace(at, placeholder.size(), value);
            at += value.size();
        }
    }
    return out;
}

const std::string& TemplateLibrary::raw(const std::string& name) const {
    const auto it = templates_.find(name);
    if (it == templates_.end()) throw ConfigError("missing template: " + name);
    return it->second;
}

std::string TemplateLibrary::base_task(Role role) const {
    const auto it = tasks_.find(std::string(to_string(role)) + "|base");
    if (it == tasks_.end()) throw ConfigError("tasks.json missing base task for role");
    return it->second;
}

std::string TemplateLibrary::stage_task(Role role, Stage stage) const {
    const auto it =
        tasks_.find(std::string(to_string(role)) + "|" + std::string(to_string(stage)));
    if (it == tasks_.end()) throw ConfigError("tasks.json missing stage task");
    return it->second;
}

// ---------------------------------------------------------------------------
// Strategies and profile

std::string_view to_string(StrategyKind kind) {
    switch (kind) {
        case StrategyKind::Attack: return "Attack";
        case StrategyKind::Defense: return "Defense";
        case StrategyKind::Investigation: return "Investigation";
    }
    return "?";
}

std::vector<StrategyKind> strategy_kinds_for(Role role) {
    switch (role) {
        case Role::Prosecutor:
        case Role::Attorney:
            return {StrategyKind::Attack, StrategyKind::Defense};
        case Role::Defendant:
            return {StrategyKind::Defense};
        case Role::Judge:
            return {StrategyKind::Investigation};
        case Role::Stenographer:
            return {};
    }
    return {};
}

Profile init_profile(Role role, const CaseMaterials& c, const TemplateLibrary& tpl) {
    Profile p;
    p.role = role;
    const std::map<std::string, std::string> vars = {{"case_id", c.case_id},
                                                     {"charge", c.charge_label}};
    auto substitute = [&](std::string text) {
        for (const auto& [key, value] : vars) {
            const std::string placeholder = "{{" + key + "}}";
            std::size_t at = 0;
            while ((at = text.find(placeholder, at)) != std::string::npos) {
                text.replace(at, placeholder.size(), value);
                at += value.size();
            }
        }
        return text;
    };
    p.base_task = substitute(tpl.base_task(role));
    for (const Stage stage : kActiveStages) {
        p.stage_tasks[stage] = substitute(tpl.stage_task(role, stage));
    }
    return p;
}

// ---------------------------------------------------------------------------
// Agent

Agent::Agent(Role role, CaseMaterials trial_case, const TemplateLibrary& tpl,
             AgentOptions options, WarnFn warn)
    : tpl_(&tpl), options_(options), warn_(std::move(warn)), case_(std::move(trial_case)) {
    profile_ = init_profile(role, case_, tpl);
    for (const StrategyKind kind : strategy_kinds_for(role)) {
        Strategy s;
        s.kind = kind;
        s.content = "（策略尚未初始化）";
        strategies_.push_back(std::move(s));
    }
}

void Agent::warn(const std::string& message) const {
    if (warn_) warn_(message);
}

RequestTag Agent::make_tag() {
    RequestTag tag;
    tag.case_id = case_.case_id;
    tag.stage = std::string(to_string(current_stage_));
    tag.role = std::string(to_string(profile_.role));
    tag.turn = turn_counters_[tag.stage]++;
    return tag;
}

std::string Agent::call_backend(Backend& backend, std::vector<ChatMessage> messages,
                                double temperature) {
    CompletionRequest request;
    request.messages = std::move(messages);
    request.temperature = temperature;
    request.max_tokens = options_.max_tokens;
    request.tag = make_tag();
    for (int attempt = 0;; ++attempt) {
        try {
            return backend.complete(request);
        } catch (const EmptyCompletion&) {
            if (attempt >= options_.empty_retries) throw;
            warn("empty completion for " + request.tag.key() + ", retrying");
        }
    }
}

std::string Agent::case_info_text() const {
    std::ostringstream out;
    out << "案件编号：" << case_.case_id << "\n";
    out << "罪名：" << case_.charge_label << "\n";
    out << "被告人信息：" << case_.defendant_info << "\n";
    out << "起诉书：" << case_.indictment << "\n";
    out << "证据清单：\n";
    for (const auto& e : case_.evidence) {
        out << "  - [" << e.evidence_id << "] " << e.title << "（"
            << (e.submitted_by == PartySide::Prosecution ? "控方" : "辩方") << "）：" << e.content
            << "\n";
    }
    return out.str();
}

std::string Agent::long_term_text() const {
    if (long_term_.empty()) return "（无）";
    std::ostringstream out;
    for (const auto& s : long_term_) {
        out << "[" << to_string(s.stage) << "] " << s.text << "\n";
    }
    return out.str();
}

std::string Agent::short_term_text() const {
    if (short_term_.empty()) return "（无）";
    std::ostringstream out;
    for (const auto& u : short_term_) {
        out << "[" << to_string(u.role) << "/" << u.directive_kind << "] " << u.text << "\n";
    }
    return out.str();
}

std::string Agent::strategies_text() const {
    if (strategies_.empty()) return "（无）";
    std::ostringstream out;
    for (const auto& s : strategies_) {
        out << "[" << to_string(s.kind) << " v" << s.version << "] " << s.content << "\n";
        if (!s.cited_articles.empty()) {
            out << "  引用条文：";
            for (std::size_t i = 0; i < s.cited_articles.size(); ++i) {
                if (i) out << "、";
                out << s.cited_articles[i].law_name << "第" << s.cited_articles[i].article_number
                    << "条";
            }
            out << "\n";
        }
        if (!s.similar_cases.empty()) {
            out << "  相似案例：\n";
            for (const auto& c : s.similar_cases) out << "    - " << c << "\n";
        }
    }
    return out.str();
}

std::string Agent::assemble_system_prompt() const {
    return tpl_->render("respond_system",
                        {{"base_task", profile_.base_task},
                         {"stage_task", profile_.stage_tasks.at(current_stage_)},
                         {"case_info", case_info_text()}});
}

std::string Agent::assemble_user_prompt(const Directive& directive) const {
    return tpl_->render("respond_user", {{"long_term", long_term_text()},
                                         {"short_term", short_term_text()},
                                         {"strategies", strategies_text()},
                                         {"directive_kind", directive.kind},
                                         {"directive_hint", directive.hint}});
}

void Agent::init_strategies(const LawCorpus* law, const CaseCorpus* cases, Backend& backend) {
    if (strategies_.empty()) return;  // stenographer

    // 1. backend-generated queries -> similar cases
    std::vector<std::string> similar;
    try {
        const std::string queries_text = call_backend(
            backend,
            {{"system", assemble_system_prompt()},
             {"user", tpl_->render("strategy_queries", {{"case_info", case_info_text()}})}},
            options_.temperature);
        std::istringstream lines(queries_text);
        std::string line;
        int used = 0;
        while (std::getline(lines, line) && used < 3) {
            const std::string q = zh::trim(line);
            if (q.empty()) continue;
            ++used;
            if (!cases) continue;
            for (const auto& hit : cases->search(q, 2)) {
                const std::string summary =
                    hit.record->case_id + "：" + hit.record->judgment_summary;
                if (std::find(similar.begin(), similar.end(), summary) == similar.end()) {
                    similar.push_back(summary);
                }
            }
        }
        if (similar.empty()) warn(std::string(to_string(profile_.role)) + ": no similar cases retrieved");
    } catch (const Error& e) {
        warn(std::string("similar-case retrieval failed: ") + e.what());
    }

    // 2. backend-proposed article titles resolved through the law corpus
    std::vector<CitedArticle> cited;
    std::string provisions;
    try {
        const std::string articles_text = call_backend(
            backend,
            {{"system", assemble_system_prompt()},
             {"user", tpl_->render("strategy_articles", {{"case_info", case_info_text()}})}},
            options_.temperature);
        std::istringstream lines(articles_text);
        std::string line;
        while (std::getline(lines, line)) {
            const std::string t = zh::trim(line);
            const auto sep = t.rfind(':');
            const auto sep_zh = t.rfind("：");
            std::string name, number_text;
            if (sep != std::string::npos) {
                name = zh::trim(t.substr(0, sep));
                number_text = zh::trim(t.substr(sep + 1));
            } else if (sep_zh != std::string::npos) {
                name = zh::trim(t.substr(0, sep_zh));
                number_text = zh::trim(t.substr(sep_zh + 3));
            } else {
                continue;
            }
            const auto number = zh::numeral_to_int(number_text);
            if (name.empty() || !number || *number <= 0) continue;
            if (!law) continue;
            try {
                const auto& article = law->get_article(name, *number);
                cited.push_back({article.law_name, article.article_number});
                provisions += article.law_name + "第" + std::to_string(article.article_number) +
                              "条：" + article.text + "\n";
            } catch (const Error& e) {
                warn(std::string("article lookup failed: ") + e.what());
            }
        }
        if (cited.empty()) warn(std::string(to_string(profile_.role)) + ": no articles resolved");
    } catch (const Error& e) {
        warn(std::string("article proposal failed: ") + e.what());
    }
    if (provisions.empty()) provisions = "（无）";

    std::string similar_text;
    for (const auto& s : similar) similar_text += "- " + s + "\n";
    if (similar_text.empty()) similar_text = "（无）";

    // 3. compose each strategy from case info, tasks, provisions and cases
    for (auto& strategy : strategies_) {
        strategy.cited_articles = cited;
        strategy.similar_cases = similar;
        strategy.content = call_backend(
            backend,
            {{"system", assemble_system_prompt()},
             {"user", tpl_->render("strategy_content",
                                   {{"kind", std::string(to_string(strategy.kind))},
                                    {"case_info", case_info_text()},
                                    {"base_task", profile_.base_task},
                                    {"provisions", provisions},
                                    {"similar_cases", similar_text}})}},
            options_.temperature);
    }
}

std::string Agent::respond(const Directive& directive, Backend& backend) {
    if (directive.role != profile_.role) {
        throw OutOfTurn("directive for " + std::string(to_string(directive.role)) +
                        " handed to " + std::string(to_string(profile_.role)));
    }
    if (profile_.role == Role::Stenographer) {
        // template-driven; no generation
        return tpl_->render("steno_announce_rules", {{"case_id", case_.case_id}});
    }
    return call_backend(backend,
                        {{"system", assemble_system_prompt()},
                         {"user", assemble_user_prompt(directive)}},
                        options_.temperature);
}

void Agent::observe(const Utterance& utterance) {
    if (profile_.role == Role::Stenographer) return;
    short_term_.push_back(utterance);
}

void Agent::reflect(Stage stage, const LawCorpus* law, const CaseCorpus* cases,
                    Backend& backend) {
    if (profile_.role == Role::Stenographer) return;

    // strategy adjustment with fresh retrievals
    try {
        std::vector<std::string> retrieved;
        const std::string queries_text =
            call_backend(backend,
                         {{"system", assemble_system_prompt()},
                          {"user", tpl_->render("reflect_query",
                                                {{"short_term", short_term_text()},
                                                 {"long_term", long_term_text()}})}},
                         options_.temperature);
        std::istringstream lines(queries_text);
        std::string line;
        int used = 0;
        while (std::getline(lines, line) && used < 2) {
            const std::string q = zh::trim(line);
            if (q.empty()) continue;
            ++used;
            if (!cases) continue;
            for (const auto& hit : cases->search(q, 2)) {
                const std::string summary =
                    hit.record->case_id + "：" + hit.record->judgment_summary;
                if (std::find(retrieved.begin(), retrieved.end(), summary) == retrieved.end()) {
                    retrieved.push_back(summary);
                }
            }
        }
        std::string retrieved_text;
        for (const auto& s : retrieved) retrieved_text += "- " + s + "\n";
        if (retrieved_text.empty()) retrieved_text = "（无）";

        for (auto& strategy : strategies_) {
            strategy.content = call_backend(
                backend,
                {{"system", assemble_system_prompt()},
                 {"user", tpl_->render("reflect_strategy",
                                       {{"kind", std::string(to_string(strategy.kind))},
                                        {"previous", strategy.content},
                                        {"short_term", short_term_text()},
                                        {"long_term", long_term_text()},
                                        {"retrieved", retrieved_text}})}},
                options_.temperature);
            if (!retrieved.empty()) strategy.similar_cases = retrieved;
            ++strategy.version;
        }
    } catch (const Error& e) {
        warn("reflection strategy update skipped (" + std::string(to_string(profile_.role)) +
             ", " + std::string(to_string(stage)) + "): " + e.what());
    }

    // long-term fold: LLM summary, or verbatim truncation on failure
    std::string summary;
    try {
        summary = call_backend(backend,
                               {{"system", assemble_system_prompt()},
                                {"user", tpl_->render("reflect_summary",
                                                      {{"short_term", short_term_text()},
                                                       {"long_term", long_term_text()}})}},
                               options_.temperature);
    } catch (const Error& e) {
        warn("summary generation failed, falling back to truncation: " + std::string(e.what()));
        const auto cps = zh::codepoints(short_term_text());
        std::string truncated;
        for (std::size_t i = 0; i < cps.size() && i < 400; ++i) truncated += zh::encode(cps[i]);
        summary = truncated + (cps.size() > 400 ? "…" : "");
    }
    const auto it = std::find_if(long_term_.begin(), long_term_.end(),
                                 [&](const StageSummary& s) { return s.stage == stage; });
    if (it != long_term_.end()) {
        it->text = summary;  // a revisited stage folds into its existing entry
    } else {
        long_term_.push_back({stage, summary});
    }
    short_term_.clear();
}

std::pair<Judgment, std::string> Agent::draft_judgment(Backend& backend) {
    if (profile_.role != Role::Judge) {
        throw BackendFailure("draft_judgment called on a non-judge agent");
    }
    const std::string instruction =
        tpl_->render("judgment", {{"long_term", long_term_text()},
                                  {"short_term", short_term_text()},
                                  {"strategies", strategies_text()}});
    std::vector<ChatMessage> messages = {{"system", assemble_system_prompt()},
                                         {"user", instruction}};
    std::string document = call_backend(backend, messages, options_.judge_verdict_temperature);
    for (int attempt = 0; attempt < 2; ++attempt) {
        try {
            std::string warning;
            if (const auto judgment = parse_verdict_block(document, &warning)) {
                if (!warning.empty()) warn(warning);
                return {*judgment, document};
            }
        } catch (const VerdictParseFailure& e) {
            if (attempt > 0) throw;
            warn(std::string("verdict block unparseable, reprompting: ") + e.what());
        }
        if (attempt > 0) break;
        messages.push_back({"assistant", document});
        messages.push_back({"user", tpl_->render("judgment_retry", {})});
        document = call_backend(backend, messages, options_.judge_verdict_temperature);
    }
    throw VerdictParseFailure("judgment document lacks a verdict block after reprompt", document);
}

std::string Agent::decide_backtrack(Backend& backend) {
    if (profile_.role != Role::Judge) return "";
    try {
        return call_backend(backend,
                            {{"system", assemble_system_prompt()},
                             {"user", tpl_->render("backtrack_decision",
                                                   {{"short_term", short_term_text()},
                                                    {"long_term", long_term_text()}})}},
                            options_.temperature);
    } catch (const Error& e) {
        warn(std::string("backtrack decision failed, continuing: ") + e.what());
        return "";
    }
}

}  // namespace courtsim
