#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <map>
#include <string>

#include "courtsim/agent.hpp"
#include "courtsim/errors.hpp"
#include "courtsim/verdict.hpp"

using namespace courtsim;

namespace {

const std::string kSourceDir = COURTSIM_SOURCE_DIR;

const TemplateLibrary& templates() {
    static TemplateLibrary tpl = TemplateLibrary::load(kSourceDir + "/assets/templates");
    return tpl;
}

CaseMaterials fixture_case() {
    CaseMaterials c;
    c.case_id = "case_agent";
    c.charge_label = "盗窃罪";
    c.defendant_info = "被告人林某";
    c.indictment = "指控其盗窃电动自行车三辆。";
    c.evidence.push_back({"e1", "鉴定意见", "价值九千六百元", PartySide::Prosecution});
    c.evidence.push_back({"e2", "谅解书", "取得谅解", PartySide::Defense});
    return c;
}

LawCorpus small_law_corpus() {
    LawCorpus corpus;
    corpus.add_article({"中华人民共和国刑法", 264, "盗窃公私财物，数额较大的……"});
    corpus.add_article({"中华人民共和国刑法", 52, "判处罚金，应当根据犯罪情节决定罚金数额。"});
    corpus.add_alias("刑法", "中华人民共和国刑法");
    return corpus;
}

CaseCorpus small_case_corpus() {
    CaseCorpus corpus;
    corpus.add_record({"sim_1", "盗窃罪", "盗窃电动车两辆", "判处有期徒刑七个月"});
    corpus.add_record({"sim_2", "诈骗罪", "虚构事实骗取财物", "判处有期徒刑一年"});
    return corpus;
}

std::string tag_key(const std::string& stage, const std::string& role, int turn) {
    return "case_agent|" + stage + "|" + role + "|" + std::to_string(turn);
}

}  // namespace

TEST_CASE("init_profile carries the role duties and all five stage tasks") {
    const auto judge = init_profile(Role::Judge, fixture_case(), templates());
    CHECK(judge.base_task.find("公正") != std::string::npos);
    CHECK(judge.base_task.find("case_agent") != std::string::npos);
    CHECK(judge.stage_tasks.size() == 5);

    const auto attorney = init_profile(Role::Attorney, fixture_case(), templates());
    CHECK(attorney.base_task.find("权利") != std::string::npos);

    const auto steno = init_profile(Role::Stenographer, fixture_case(), templates());
    CHECK(steno.base_task.find("如实记录") != std::string::npos);
}

TEST_CASE("strategy kinds per role match the assignment table") {
    using K = StrategyKind;
    CHECK(strategy_kinds_for(Role::Prosecutor) == std::vector<K>{K::Attack, K::Defense});
    CHECK(strategy_kinds_for(Role::Attorney) == std::vector<K>{K::Attack, K::Defense});
    CHECK(strategy_kinds_for(Role::Defendant) == std::vector<K>{K::Defense});
    CHECK(strategy_kinds_for(Role::Judge) == std::vector<K>{K::Investigation});
    CHECK(strategy_kinds_for(Role::Stenographer).empty());
}

TEST_CASE("agents are constructed with the role's strategy slots") {
    Agent judge(Role::Judge, fixture_case(), templates(), {});
    REQUIRE(judge.strategies().size() == 1);
    CHECK(judge.strategies()[0].kind == StrategyKind::Investigation);
    CHECK(judge.strategies()[0].version == 1);
    Agent defendant(Role::Defendant, fixture_case(), templates(), {});
    REQUIRE(defendant.strategies().size() == 1);
    CHECK(defendant.strategies()[0].kind == StrategyKind::Defense);
    Agent steno(Role::Stenographer, fixture_case(), templates(), {});
    CHECK(steno.strategies().empty());
}

TEST_CASE("init_strategies: scripted fixture embeds retrievals and contents") {
    const auto law = small_law_corpus();
    const auto cases = small_case_corpus();
    std::map<std::string, std::string> fixtures{
        {tag_key("TrialPreparation", "Prosecutor", 0), "盗窃电动车\n骗取财物"},
        {tag_key("TrialPreparation", "Prosecutor", 1), "中华人民共和国刑法:264\n刑法:52"},
        {tag_key("TrialPreparation", "Prosecutor", 2), "进攻策略：围绕证据链提出讯问。"},
        {tag_key("TrialPreparation", "Prosecutor", 3), "防御策略：维护指控证据的证明力。"},
    };
    ScriptedBackend backend(fixtures, true);
    Agent prosecutor(Role::Prosecutor, fixture_case(), templates(), {});
    prosecutor.init_strategies(&law, &cases, backend);

    REQUIRE(prosecutor.strategies().size() == 2);
    const auto& attack = prosecutor.strategies()[0];
    CHECK(attack.kind == StrategyKind::Attack);
    CHECK(attack.content == "进攻策略：围绕证据链提出讯问。");
    REQUIRE(attack.cited_articles.size() == 2);
    CHECK(attack.cited_articles[0].article_number == 264);
    CHECK(attack.cited_articles[1].law_name == "中华人民共和国刑法");  // alias resolved
    CHECK_FALSE(attack.similar_cases.empty());
    CHECK(attack.similar_cases[0].find("sim_1") != std::string::npos);
    CHECK(prosecutor.strategies()[1].content == "防御策略：维护指控证据的证明力。");
}

TEST_CASE("init_strategies degrades to empty retrievals with warnings") {
    std::vector<std::string> warnings;
    Agent judge(Role::Judge, fixture_case(), templates(), {},
                [&warnings](const std::string& w) { warnings.push_back(w); });
    std::map<std::string, std::string> fixtures{
        {tag_key("TrialPreparation", "Judge", 0), "不相关查询"},
        {tag_key("TrialPreparation", "Judge", 1), "没有可解析的条文行"},
        {tag_key("TrialPreparation", "Judge", 2), "调查策略内容。"},
    };
    ScriptedBackend backend(fixtures, true);
    judge.init_strategies(nullptr, nullptr, backend);  // no corpora loaded
    REQUIRE(judge.strategies().size() == 1);
    CHECK(judge.strategies()[0].content == "调查策略内容。");
    CHECK(judge.strategies()[0].cited_articles.empty());
    CHECK(judge.strategies()[0].similar_cases.empty());
    CHECK(warnings.size() >= 2);
}

TEST_CASE("respond: prompt sections appear in the fixed order") {
    Agent judge(Role::Judge, fixture_case(), templates(), {});
    judge.enter_stage(Stage::TrialDebate);
    judge.observe({0, Stage::TrialDebate, Role::Prosecutor, "debate", "公诉意见。"});

    const Directive directive{Role::Judge, "debate-framing", "frame the issues"};
    const auto system_prompt = judge.assemble_system_prompt();
    const auto user_prompt = judge.assemble_user_prompt(directive);

    CHECK(system_prompt.find(judge.profile().base_task) != std::string::npos);
    CHECK(system_prompt.find(judge.profile().stage_tasks.at(Stage::TrialDebate)) !=
          std::string::npos);

    const auto long_at = user_prompt.find("长期记忆");
    const auto short_at = user_prompt.find("短期记忆");
    const auto strategy_at = user_prompt.find("【策略】");
    const auto directive_at = user_prompt.find("frame the issues");
    REQUIRE(long_at != std::string::npos);
    REQUIRE(short_at != std::string::npos);
    REQUIRE(strategy_at != std::string::npos);
    REQUIRE(directive_at != std::string::npos);
    CHECK(long_at < short_at);
    CHECK(short_at < strategy_at);
    CHECK(strategy_at < directive_at);
    // judge's investigation strategy text rides along in the debate prompt
    CHECK(user_prompt.find("Investigation") != std::string::npos);
    // same state -> same prompt bytes
    CHECK(judge.assemble_user_prompt(directive) == user_prompt);
}

TEST_CASE("respond: fixture playback, role check, empty retry exhaustion") {
    std::map<std::string, std::string> fixtures{
        {tag_key("TrialDebate", "Prosecutor", 0), "第一轮公诉辩论意见。"},
        {tag_key("TrialDebate", "Prosecutor", 1), ""},
    };
    ScriptedBackend backend(fixtures, true);
    Agent prosecutor(Role::Prosecutor, fixture_case(), templates(), {});
    prosecutor.enter_stage(Stage::TrialDebate);

    CHECK_THROWS_AS(prosecutor.respond({Role::Judge, "debate", ""}, backend), OutOfTurn);
    CHECK(prosecutor.respond({Role::Prosecutor, "debate", "round 1"}, backend) ==
          "第一轮公诉辩论意见。");
    // canned empty response: retried, then EmptyCompletion
    CHECK_THROWS_AS(prosecutor.respond({Role::Prosecutor, "debate", "round 2"}, backend),
                    EmptyCompletion);
}

TEST_CASE("respond at stage start shows an empty short-term section") {
    Agent judge(Role::Judge, fixture_case(), templates(), {});
    judge.enter_stage(Stage::TrialInvestigation);
    const auto prompt = judge.assemble_user_prompt({Role::Judge, "question", "clarify"});
    CHECK(prompt.find("【短期记忆（本阶段最新发言）】\n（无）") != std::string::npos);
}

TEST_CASE("stenographer responds from the template without touching the backend") {
    ScriptedBackend backend({}, true);  // strict and empty: any call would throw
    Agent steno(Role::Stenographer, fixture_case(), templates(), {});
    steno.enter_stage(Stage::TrialPreparation);
    const auto text = steno.respond({Role::Stenographer, "announce-rules", ""}, backend);
    CHECK(text.find("法庭纪律") != std::string::npos);
    steno.observe({0, Stage::TrialPreparation, Role::Stenographer, "announce-rules", text});
    CHECK(steno.short_term().empty());  // stenographer keeps no memory
}

TEST_CASE("observe keeps arrival order; reflect clears and folds") {
    ScriptedBackend backend({}, false, make_synthetic_responder());
    const auto law = small_law_corpus();
    const auto cases = small_case_corpus();
    Agent attorney(Role::Attorney, fixture_case(), templates(), {});
    attorney.enter_stage(Stage::TrialPreparation);

    attorney.observe({0, Stage::TrialPreparation, Role::Stenographer, "announce-rules", "纪律"});
    attorney.observe({1, Stage::TrialPreparation, Role::Judge, "verify-identity", "核对身份"});
    REQUIRE(attorney.short_term().size() == 2);
    CHECK(attorney.short_term()[0].text == "纪律");
    CHECK(attorney.short_term()[1].text == "核对身份");

    const int version_before = attorney.strategies()[0].version;
    attorney.reflect(Stage::TrialPreparation, &law, &cases, backend);
    CHECK(attorney.short_term().empty());
    REQUIRE(attorney.long_term().size() == 1);
    CHECK(attorney.long_term()[0].stage == Stage::TrialPreparation);
    CHECK(attorney.strategies()[0].version == version_before + 1);

    // observe after reflection starts a fresh buffer
    attorney.enter_stage(Stage::TrialInvestigation);
    attorney.observe({2, Stage::TrialInvestigation, Role::Prosecutor, "question", "讯问"});
    CHECK(attorney.short_term().size() == 1);
}

TEST_CASE("reflect over three stages: versions count completed reflections") {
    ScriptedBackend backend({}, false, make_synthetic_responder());
    Agent defendant(Role::Defendant, fixture_case(), templates(), {});
    const Stage stages[] = {Stage::TrialPreparation, Stage::TrialInvestigation,
                            Stage::EvidencePresentation};
    for (const Stage stage : stages) {
        defendant.enter_stage(stage);
        defendant.observe({0, stage, Role::Judge, "question", "发言"});
        defendant.reflect(stage, nullptr, nullptr, backend);
    }
    CHECK(defendant.long_term().size() == 3);
    CHECK(defendant.strategies()[0].version == 4);  // 1 + three reflections
}

TEST_CASE("reflect on backend failure: truncation fallback still folds and clears") {
    ScriptedBackend failing({}, true);  // every call raises ScriptMiss
    std::vector<std::string> warnings;
    Agent prosecutor(Role::Prosecutor, fixture_case(), templates(), {},
                     [&warnings](const std::string& w) { warnings.push_back(w); });
    prosecutor.enter_stage(Stage::TrialPreparation);
    prosecutor.observe({0, Stage::TrialPreparation, Role::Judge, "verify-identity",
                        "这是一段会被折叠进长期记忆的发言。"});
    const int version_before = prosecutor.strategies()[0].version;

    prosecutor.reflect(Stage::TrialPreparation, nullptr, nullptr, failing);
    CHECK(prosecutor.short_term().empty());
    REQUIRE(prosecutor.long_term().size() == 1);
    CHECK(prosecutor.long_term()[0].text.find("会被折叠") != std::string::npos);
    CHECK(prosecutor.strategies()[0].version == version_before);  // regeneration skipped
    CHECK_FALSE(warnings.empty());
}

TEST_CASE("draft_judgment: parse, reprompt once, then fail with the raw document") {
    const std::string good_block =
        "判决书正文。\n===VERDICT===\nIMPRISONMENT: 14\nPROBATION: 无\nFINE: 5000\nARTICLES: "
        "中华人民共和国刑法:264\n===END===\n";

    SUBCASE("well-formed block parses directly") {
        std::map<std::string, std::string> fixtures{
            {tag_key("FinalStatement", "Judge", 0), good_block}};
        ScriptedBackend backend(fixtures, true);
        Agent judge(Role::Judge, fixture_case(), templates(), {});
        judge.enter_stage(Stage::FinalStatement);
        const auto [judgment, document] = judge.draft_judgment(backend);
        CHECK(judgment.imprisonment.months == 14);
        CHECK(judgment.fine_amount == 5000);
        CHECK(document == good_block);
    }

    SUBCASE("first document broken, reprompt succeeds") {
        std::map<std::string, std::string> fixtures{
            {tag_key("FinalStatement", "Judge", 0), "忘了输出判决块的判决书。"},
            {tag_key("FinalStatement", "Judge", 1), good_block}};
        ScriptedBackend backend(fixtures, true);
        Agent judge(Role::Judge, fixture_case(), templates(), {});
        judge.enter_stage(Stage::FinalStatement);
        const auto [judgment, document] = judge.draft_judgment(backend);
        CHECK(judgment.imprisonment.months == 14);
    }

    SUBCASE("both attempts broken: VerdictParseFailure carries the document") {
        std::map<std::string, std::string> fixtures{
            {tag_key("FinalStatement", "Judge", 0), "无块文书一。"},
            {tag_key("FinalStatement", "Judge", 1), "无块文书二。"}};
        ScriptedBackend backend(fixtures, true);
        Agent judge(Role::Judge, fixture_case(), templates(), {});
        judge.enter_stage(Stage::FinalStatement);
        try {
            judge.draft_judgment(backend);
            FAIL("expected VerdictParseFailure");
        } catch (const VerdictParseFailure& e) {
            CHECK(e.document == "无块文书二。");
        }
    }

    SUBCASE("probation months without flag are normalized with a warning") {
        std::map<std::string, std::string> fixtures{
            {tag_key("FinalStatement", "Judge", 0),
             "正文\n===VERDICT===\nIMPRISONMENT: 12\nPROBATION: 18\nFINE: 无\nARTICLES: "
             "无\n===END==="}};
        ScriptedBackend backend(fixtures, true);
        std::vector<std::string> warnings;
        Agent judge(Role::Judge, fixture_case(), templates(), {},
                    [&warnings](const std::string& w) { warnings.push_back(w); });
        judge.enter_stage(Stage::FinalStatement);
        const auto [judgment, document] = judge.draft_judgment(backend);
        CHECK(judgment.probation_applicable);
        CHECK(judgment.probation_months == 18);
        CHECK_FALSE(warnings.empty());
    }
}

TEST_CASE("template library errors") {
    CHECK_THROWS_AS(TemplateLibrary::load("/no/such/dir"), ConfigError);
    const auto& tpl = templates();
    CHECK_THROWS_AS(tpl.raw("missing_template"), ConfigError);
    CHECK(tpl.render("respond_user", {{"long_term", "X"}}).find("X") != std::string::npos);
}
