#pragma once

#include <functional>
#include <map>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "courtsim/backend.hpp"
#include "courtsim/domain.hpp"
#include "courtsim/procedure.hpp"
#include "courtsim/retrieval.hpp"

namespace courtsim {

// ---------------------------------------------------------------------------
// Prompt templates

/// Loads the prompt template directory: every *.txt file is available by
/// stem, tasks.json provides per-role base and stage task texts.
class TemplateLibrary {
public:
    static TemplateLibrary load(const std::string& dir);

    /// Renders a template by replacing {{key}} placeholders.
    std::string render(const std::string& name,
                       const std::map<std::string, std::string>& vars) const;
    const std::string& raw(const std::string& name) const;

    std::string base_task(Role role) const;
    std::string stage_task(Role role, Stage stage) const;

private:
    std::map<std::string, std::string> templates_;
    std::map<std::string, std::string> tasks_;  // "<role>|base" / "<role>|<stage>"
};

// ---------------------------------------------------------------------------
// Agent state

struct Profile {
    Role role = Role::Judge;
    std::string base_task;
    std::map<Stage, std::string> stage_tasks;  // the five active stages
};

struct StageSummary {
    Stage stage = Stage::TrialPreparation;
    std::string text;
};

enum class StrategyKind { Attack, Defense, Investigation };

std::string_view to_string(StrategyKind kind);

/// Strategy kinds assigned to a role: prosecutor/attorney get attack+defense,
/// defendant defense, judge investigation, stenographer none.
std::vector<StrategyKind> strategy_kinds_for(Role role);

struct Strategy {
    StrategyKind kind = StrategyKind::Defense;
    std::string content;
    std::vector<CitedArticle> cited_articles;
    std::vector<std::string> similar_cases;
    int version = 1;
};

/// Built-in task texts for a role, parameterized with case identifiers.
Profile init_profile(Role role, const CaseMaterials& c, const TemplateLibrary& tpl);

struct AgentOptions {
    double temperature = 0.7;
    double judge_verdict_temperature = 0.0;
    int max_tokens = 1024;
    int empty_retries = 2;
};

/// One courtroom participant: profile, two-tier memory and typed strategies.
/// The stenographer variant is template-driven and never calls the backend.
class Agent {
public:
    using WarnFn = std::function<void(const std::string&)>;

    Agent(Role role, CaseMaterials trial_case, const TemplateLibrary& tpl, AgentOptions options,
          WarnFn warn = {});

    Role role() const { return profile_.role; }
    const Profile& profile() const { return profile_; }
    const std::vector<Utterance>& short_term() const { return short_term_; }
    const std::vector<StageSummary>& long_term() const { return long_term_; }
    const std::vector<Strategy>& strategies() const { return strategies_; }
    Stage current_stage() const { return current_stage_; }

    /// Strategy initialization with retrieval: backend-generated case queries,
    /// backend-proposed article titles resolved through the law corpus, and
    /// backend-composed strategy content. Retrieval misses degrade to empty
    /// source lists with a warning.
    void init_strategies(const LawCorpus* law, const CaseCorpus* cases, Backend& backend);

    void enter_stage(Stage stage) { current_stage_ = stage; }

    /// Produces the utterance text for a pending directive. Throws OutOfTurn
    /// on role mismatch, EmptyCompletion after the retry budget.
    std::string respond(const Directive& directive, Backend& backend);

    void observe(const Utterance& utterance);

    /// End-of-stage reflection: strategies regenerated with fresh retrievals,
    /// long-term memory folded (verbatim-truncation fallback on backend
    /// failure), short-term buffer cleared.
    void reflect(Stage stage, const LawCorpus* law, const CaseCorpus* cases, Backend& backend);

    /// Judge only: generates the judgment document ending in a verdict block;
    /// one corrective reprompt before VerdictParseFailure.
    std::pair<Judgment, std::string> draft_judgment(Backend& backend);

    /// Judge only: raw decision text for the optional debate backtrack.
    std::string decide_backtrack(Backend& backend);

    // Pure prompt assembly (fixed section order), exposed for tests.
    std::string assemble_system_prompt() const;
    std::string assemble_user_prompt(const Directive& directive) const;

private:
    RequestTag make_tag();
    std::string call_backend(Backend& backend, std::vector<ChatMessage> messages,
                             double temperature);
    std::string case_info_text() const;
    std::string long_term_text() const;
    std::string short_term_text() const;
    std::string strategies_text() const;
    void warn(const std::string& message) const;

    const TemplateLibrary* tpl_;
    AgentOptions options_;
    WarnFn warn_;
    CaseMaterials case_;
    Profile profile_;
    std::vector<Utterance> short_term_;
    std::vector<StageSummary> long_term_;
    std::vector<Strategy> strategies_;
    Stage current_stage_ = Stage::TrialPreparation;
    std::map<std::string, int> turn_counters_;  // stage -> next turn index
};

}  // namespace courtsim
