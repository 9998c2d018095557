#include "courtsim/retrieval.hpp"

#include <algorithm>
#include <cmath>

#include "courtsim/errors.hpp"
#include "courtsim/jsonl.hpp"
#include "courtsim/zh_text.hpp"

#ifdef _OPENMP
#include <omp.h>
#endif

namespace courtsim {

void LawCorpus::add_article(LawArticle article) {
    const auto key = std::make_pair(article.law_name, article.article_number);
    if (articles_.count(key)) {
        throw DuplicateArticle("duplicate article: " + article.law_name + " 第" +
                               std::to_string(article.article_number) + "条");
    }
    articles_.emplace(key, std::move(article));
}

void LawCorpus::add_alias(const std::string& alias, const std::string& canonical) {
    const auto it = aliases_.find(alias);
    if (it != aliases_.end() && it->second != canonical) {
        throw AmbiguousLawName("alias " + alias + " maps to both " + it->second + " and " +
                               canonical);
    }
    aliases_[alias] = canonical;
}

std::string LawCorpus::resolve(std::string_view law_name) const {
    std::string name(law_name);
    const auto it = aliases_.find(name);
    if (it != aliases_.end()) return it->second;
    return name;
}

const LawArticle& LawCorpus::get_article(std::string_view law_name, long long article_number) const {
    const std::string canonical = resolve(law_name);
    const auto it = articles_.find(std::make_pair(canonical, article_number));
    if (it == articles_.end()) {
        throw ArticleNotFound("article not found: " + canonical + " 第" +
                              std::to_string(article_number) + "条");
    }
    return it->second;
}

std::vector<std::string> bigram_tokens(std::string_view text) {
    const auto cps = zh::codepoints(text);
    std::vector<char32_t> filtered;
    filtered.reserve(cps.size());
    for (const char32_t cp : cps) {
        if (cp == U' ' || cp == U'\t' || cp == U'\n' || cp == U'\r' || cp == 0x3000) continue;
        filtered.push_back(cp);
    }
    std::vector<std::string> tokens;
    if (filtered.empty()) return tokens;
    if (filtered.size() == 1) {
        tokens.push_back(zh::encode(filtered[0]));
        return tokens;
    }
    tokens.reserve(filtered.size() - 1);
    for (std::size_t i = 0; i + 1 < filtered.size(); ++i) {
        tokens.push_back(zh::encode(filtered[i]) + zh::encode(filtered[i + 1]));
    }
    return tokens;
}

void CaseCorpus::add_record(CaseRecord record) {
    if (id_index_.count(record.case_id)) {
        throw DuplicateArticle("duplicate case_id: " + record.case_id);
    }
    const auto tokens = bigram_tokens(record.facts + record.judgment_summary);
    std::unordered_map<std::string, int> counts;
    for (const auto& t : tokens) ++counts[t];
    for (const auto& [term, _] : counts) ++doc_freq_[term];
    id_index_[record.case_id] = records_.size();
    doc_term_counts_.push_back(std::move(counts));
    doc_lengths_.push_back(tokens.size());
    records_.push_back(std::move(record));
}

std::vector<SearchHit> CaseCorpus::search(std::string_view query, std::size_t k) const {
    std::vector<SearchHit> hits;
    if (k == 0 || records_.empty()) return hits;

    // Unique query terms; repeated terms in the query do not double-count.
    std::vector<std::string> terms;
    {
        auto all = bigram_tokens(query);
        std::sort(all.begin(), all.end());
        all.erase(std::unique(all.begin(), all.end()), all.end());
        terms = std::move(all);
    }
    const double doc_count = static_cast<double>(records_.size());
    double total_len = 0;
    for (const std::size_t len : doc_lengths_) total_len += static_cast<double>(len);
    const double avg_len = total_len / doc_count;

    std::vector<double> scores(records_.size(), 0.0);
    const auto n_docs = static_cast<long long>(records_.size());
#pragma omp parallel for schedule(static)
    for (long long d = 0; d < n_docs; ++d) {
        const auto& counts = doc_term_counts_[d];
        const double len = static_cast<double>(doc_lengths_[d]);
        double score = 0.0;
        for (const auto& term : terms) {
            const auto it = counts.find(term);
            if (it == counts.end()) continue;
            const auto df_it = doc_freq_.find(term);
            const double df = df_it == doc_freq_.end() ? 0.0 : df_it->second;
            const double idf = std::log(1.0 + (doc_count - df + 0.5) / (df + 0.5));
            const double tf = static_cast<double>(it->second);
            const double denom = tf + kK1 * (1.0 - kB + kB * len / avg_len);
            score += idf * (tf * (kK1 + 1.0)) / denom;
        }
        scores[d] = score;
    }

    std::vector<std::size_t> order(records_.size());
    for (std::size_t d = 0; d < records_.size(); ++d) order[d] = d;
    std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
        if (scores[a] != scores[b]) return scores[a] > scores[b];
        return records_[a].case_id < records_[b].case_id;
    });
    if (order.size() > k) order.resize(k);
    hits.reserve(order.size());
    for (const std::size_t d : order) hits.push_back({&records_[d], scores[d]});
    return hits;
}

LawCorpus load_law_corpus(const std::string& law_path, const std::optional<std::string>& alias_path) {
    LawCorpus corpus;
    jsonl::for_each_record(law_path, [&](std::size_t lineno, const jsonl::ordered_json& j) {
        LawArticle a;
        try {
            a.law_name = j.at("law_name").get<std::string>();
            a.article_number = j.at("article_number").get<long long>();
            a.text = j.at("text").get<std::string>();
        } catch (const std::exception& e) {
            throw MalformedRecord(law_path + ":" + std::to_string(lineno) + ": " + e.what());
        }
        corpus.add_article(std::move(a));
    });
    if (alias_path) {
        nlohmann::json aliases;
        try {
            aliases = nlohmann::json::parse(jsonl::slurp(*alias_path));
        } catch (const std::exception& e) {
            throw MalformedRecord(*alias_path + ": " + e.what());
        }
        for (const auto& [alias, canonical] : aliases.items()) {
            corpus.add_alias(alias, canonical.get<std::string>());
        }
    }
    return corpus;
}

CaseCorpus load_case_corpus(const std::string& path) {
    CaseCorpus corpus;
    jsonl::for_each_record(path, [&](std::size_t lineno, const jsonl::ordered_json& j) {
        CaseRecord r;
        try {
            r.case_id = j.at("case_id").get<std::string>();
            r.charge_label = j.value("charge_label", std::string{});
            r.facts = j.at("facts").get<std::string>();
            r.judgment_summary = j.value("judgment_summary", std::string{});
        } catch (const std::exception& e) {
            throw MalformedRecord(path + ":" + std::to_string(lineno) + ": " + e.what());
        }
        corpus.add_record(std::move(r));
    });
    return corpus;
}

}  // namespace courtsim
