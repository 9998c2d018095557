#include "courtsim/verdict.hpp"

#include <sstream>
#include <vector>

#include "courtsim/errors.hpp"
#include "courtsim/zh_text.hpp"

namespace courtsim {

std::string render_verdict_block(const Judgment& j) {
    std::ostringstream out;
    out << kVerdictBegin << "\n";
    out << "IMPRISONMENT: " << term_to_string(j.imprisonment) << "\n";
    out << "PROBATION: "
        << (j.probation_applicable && j.probation_months ? std::to_string(*j.probation_months)
                                                         : std::string("无"))
        << "\n";
    out << "FINE: "
        << (j.fine_applicable && j.fine_amount ? std::to_string(*j.fine_amount) : std::string("无"))
        << "\n";
    out << "ARTICLES: ";
    if (j.cited_articles.empty()) {
        out << "无";
    } else {
        for (std::size_t i = 0; i < j.cited_articles.size(); ++i) {
            if (i) out << ",";
            out << j.cited_articles[i].law_name << ":" << j.cited_articles[i].article_number;
        }
    }
    out << "\n" << kVerdictEnd;
    return out.str();
}

namespace {

std::optional<long long> parse_plain_int(const std::string& s) {
    if (s.empty()) return std::nullopt;
    for (char c : s) {
        if (c < '0' || c > '9') return std::nullopt;
    }
    try {
        return std::stoll(s);
    } catch (const std::exception&) {
        return std::nullopt;
    }
}

}  // namespace

std::optional<Judgment> parse_verdict_block(const std::string& document, std::string* warning) {
    const auto begin = document.find(kVerdictBegin);
    if (begin == std::string::npos) return std::nullopt;
    const auto body_start = begin + kVerdictBegin.size();
    const auto end = document.find(kVerdictEnd, body_start);
    if (end == std::string::npos) {
        throw VerdictParseFailure("verdict block not terminated", document);
    }

    std::optional<ImprisonmentTerm> imprisonment;
    std::optional<long long> probation_months;
    bool probation_flag = false;
    std::optional<long long> fine_amount;
    bool fine_flag = false;
    std::vector<CitedArticle> articles;

    std::istringstream lines(document.substr(body_start, end - body_start));
    std::string line;
    while (std::getline(lines, line)) {
        const std::string t = zh::trim(line);
        if (t.empty()) continue;
        const auto colon = t.find(": ");
        const std::string key = colon == std::string::npos ? t : t.substr(0, colon);
        const std::string value = colon == std::string::npos ? "" : zh::trim(t.substr(colon + 2));
        if (key == "IMPRISONMENT") {
            imprisonment = term_from_string(value);
            if (!imprisonment) {
                throw VerdictParseFailure("unparseable IMPRISONMENT value: " + value, document);
            }
        } else if (key == "PROBATION") {
            if (value != "无") {
                const auto months = parse_plain_int(value);
                if (!months || *months <= 0) {
                    throw VerdictParseFailure("unparseable PROBATION value: " + value, document);
                }
                probation_months = months;
                probation_flag = true;
                if (warning) {
                    // A bare month count implies applicability.
                    *warning = "probation months given; normalized probation_applicable=true";
                }
            }
        } else if (key == "FINE") {
            if (value != "无") {
                const auto amount = parse_plain_int(value);
                if (!amount) {
                    throw VerdictParseFailure("unparseable FINE value: " + value, document);
                }
                fine_amount = amount;
                fine_flag = true;
            }
        } else if (key == "ARTICLES") {
            if (value != "无" && !value.empty()) {
                std::istringstream parts(value);
                std::string part;
                while (std::getline(parts, part, ',')) {
                    const std::string p = zh::trim(part);
                    const auto sep = p.rfind(':');
                    if (sep == std::string::npos) continue;
                    const auto num = parse_plain_int(p.substr(sep + 1));
                    if (!num) continue;
                    articles.push_back({p.substr(0, sep), *num});
                }
            }
        }
    }
    if (!imprisonment) {
        throw VerdictParseFailure("verdict block missing IMPRISONMENT line", document);
    }
    return make_judgment(*imprisonment, probation_flag, probation_months, fine_flag, fine_amount,
                         {}, std::move(articles));
}

}  // namespace courtsim
