#pragma once

#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

#include "courtsim/domain.hpp"

namespace courtsim {

// ---------------------------------------------------------------------------
// Legal article lookup (exact, by name and number)

struct LawArticle {
    std::string law_name;
    long long article_number = 0;
    std::string text;
};

class LawCorpus {
public:
    /// Throws DuplicateArticle when (law_name, article_number) repeats and
    /// ConfigError when an alias is ambiguous.
    void add_article(LawArticle article);
    void add_alias(const std::string& alias, const std::string& canonical);

    /// Exact match after alias resolution. Throws ArticleNotFound /
    /// AmbiguousLawName.
    const LawArticle& get_article(std::string_view law_name, long long article_number) const;

    std::size_t size() const { return articles_.size(); }
    const std::map<std::pair<std::string, long long>, LawArticle>& articles() const {
        return articles_;
    }

private:
    std::string resolve(std::string_view law_name) const;

    std::map<std::pair<std::string, long long>, LawArticle> articles_;
    std::unordered_map<std::string, std::string> aliases_;
};

// ---------------------------------------------------------------------------
// Similar-case search (BM25 over CJK character bigrams)

struct CaseRecord {
    std::string case_id;
    std::string charge_label;
    std::string facts;
    std::string judgment_summary;
};

struct SearchHit {
    const CaseRecord* record = nullptr;
    double score = 0.0;
};

class CaseCorpus {
public:
    /// Throws DuplicateArticle-style error on repeated case_id.
    void add_record(CaseRecord record);

    /// BM25 (k1=1.2, b=0.75) over character bigrams of facts+judgment_summary.
    /// Descending score, ties broken by ascending case_id, at most k hits;
    /// zero-score documents are not returned.
    std::vector<SearchHit> search(std::string_view query, std::size_t k) const;

    std::size_t size() const { return records_.size(); }
    const std::vector<CaseRecord>& records() const { return records_; }

    static constexpr double kK1 = 1.2;
    static constexpr double kB = 0.75;

private:
    std::vector<CaseRecord> records_;
    std::vector<std::unordered_map<std::string, int>> doc_term_counts_;
    std::vector<std::size_t> doc_lengths_;  // bigram count per document
    std::unordered_map<std::string, int> doc_freq_;
    std::unordered_map<std::string, std::size_t> id_index_;
};

/// Character bigrams of the non-whitespace codepoints of `text`, as UTF-8
/// strings. A single-codepoint text yields one unigram token.
std::vector<std::string> bigram_tokens(std::string_view text);

// ---------------------------------------------------------------------------
// File loading

/// Law corpus file: JSONL with fields law_name, article_number, text.
/// Alias file: JSON object mapping alias -> canonical name (optional).
LawCorpus load_law_corpus(const std::string& law_path,
                          const std::optional<std::string>& alias_path = std::nullopt);

/// Case corpus file: JSONL with fields case_id, charge_label, facts,
/// judgment_summary.
CaseCorpus load_case_corpus(const std::string& path);

}  // namespace courtsim
