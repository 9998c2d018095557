#include <string>
#include <string_view>
#include <vector>

#include "courtsim/domain.hpp"
#include "courtsim/errors.hpp"
#include "courtsim/zh_text.hpp"

namespace courtsim {

namespace {

using zh::codepoints;
using Cps = std::vector<char32_t>;

bool match_at(const Cps& cps, std::size_t pos, const Cps& pat) {
    if (pos + pat.size() > cps.size()) return false;
    for (std::size_t i = 0; i < pat.size(); ++i) {
        if (cps[pos + i] != pat[i]) return false;
    }
    return true;
}

std::size_t find(const Cps& cps, const Cps& pat, std::size_t from = 0) {
    if (pat.empty()) return std::string::npos;
    for (std::size_t i = from; i + pat.size() <= cps.size(); ++i) {
        if (match_at(cps, i, pat)) return i;
    }
    return std::string::npos;
}

// Reads "X年[零]Y个月", "X年" or "Y[个]月" starting at pos. Returns total
// months, or nullopt when no year/month component parses.
std::optional<long long> read_year_month(const Cps& cps, std::size_t pos) {
    const char32_t kYear = U'年';
    const char32_t kMonth = U'月';
    const char32_t kGe = U'个';
    const char32_t kZero = U'零';

    long long months = 0;
    bool any = false;
    std::size_t i = pos;

    std::size_t run = zh::numeral_run_length(cps, i);
    if (run == 0) return std::nullopt;
    auto first = zh::numeral_to_int(Cps(cps.begin() + i, cps.begin() + i + run));
    if (!first) return std::nullopt;
    i += run;

    if (i < cps.size() && cps[i] == kYear) {
        months += *first * 12;
        any = true;
        ++i;
        // Optional 零 connector ("一年零三个月"); 零 directly before 个/月 is
        // the digit zero and is left for the month run.
        if (i < cps.size() && cps[i] == kZero && i + 1 < cps.size() &&
            zh::numeral_run_length(cps, i + 1) > 0) {
            ++i;
        }
        run = zh::numeral_run_length(cps, i);
        if (run > 0) {
            auto m = zh::numeral_to_int(Cps(cps.begin() + i, cps.begin() + i + run));
            std::size_t j = i + run;
            if (m && j < cps.size() && (cps[j] == kMonth || (cps[j] == kGe && j + 1 < cps.size() && cps[j + 1] == kMonth))) {
                months += *m;
            }
        }
        return months;
    }

    if (i < cps.size() && (cps[i] == kMonth || (cps[i] == kGe && i + 1 < cps.size() && cps[i + 1] == kMonth))) {
        months += *first;
        any = true;
    }
    if (!any) return std::nullopt;
    return months;
}

const Cps kFixedTerm = codepoints("有期徒刑");
const Cps kDetention = codepoints("拘役");
const Cps kLife = codepoints("无期徒刑");
const Cps kDeath = codepoints("死刑");
const Cps kDeathAbbrev = codepoints("死缓");
const Cps kExempt1 = codepoints("免予刑事处罚");
const Cps kExempt2 = codepoints("免于刑事处罚");
const Cps kFineOnly = codepoints("单处罚金");

}  // namespace

ImprisonmentTerm parse_duration(std::string_view text) {
    const std::string trimmed = zh::trim(text);
    if (trimmed.empty()) throw UnparseableDuration("empty duration phrase");
    const Cps cps = codepoints(trimmed);

    if (find(cps, kLife) != std::string::npos) return ImprisonmentTerm::life();
    if (find(cps, kDeath) != std::string::npos || find(cps, kDeathAbbrev) != std::string::npos) {
        return ImprisonmentTerm::death();
    }
    if (find(cps, kExempt1) != std::string::npos || find(cps, kExempt2) != std::string::npos ||
        find(cps, kFineOnly) != std::string::npos) {
        return ImprisonmentTerm::no_custody();
    }

    for (const Cps* keyword : {&kFixedTerm, &kDetention}) {
        const std::size_t at = find(cps, *keyword);
        if (at == std::string::npos) continue;
        const auto months = read_year_month(cps, at + keyword->size());
        if (months) return ImprisonmentTerm::of_months(*months);
        throw UnparseableDuration("duration keyword without a parseable term: " + trimmed);
    }
    throw UnparseableDuration("no recognized duration pattern: " + trimmed);
}

long long parse_amount(std::string_view text) {
    const std::string trimmed = zh::trim(text);
    if (trimmed.empty()) throw UnparseableAmount("empty amount phrase");
    const Cps cps = codepoints(trimmed);
    const char32_t kYuan = U'元';

    for (std::size_t i = 0; i < cps.size(); ++i) {
        const std::size_t run = zh::numeral_run_length(cps, i);
        if (run == 0) continue;
        const std::size_t end = i + run;
        if (end < cps.size() && cps[end] == kYuan) {
            const auto value = zh::numeral_to_int(Cps(cps.begin() + i, cps.begin() + end));
            if (value && *value >= 0) return *value;
        }
        i = end - 1;  // skip past this run
    }
    throw UnparseableAmount("no numeral followed by 元: " + trimmed);
}

std::vector<CitedArticle> extract_cited_articles(std::string_view text) {
    const Cps cps = codepoints(std::string(text));
    const char32_t kOpen = U'《';
    const char32_t kClose = U'》';
    const char32_t kDi = U'第';
    const char32_t kTiao = U'条';

    std::vector<CitedArticle> out;
    for (std::size_t i = 0; i < cps.size(); ++i) {
        if (cps[i] != kOpen) continue;
        std::size_t close = i + 1;
        while (close < cps.size() && cps[close] != kClose) ++close;
        if (close >= cps.size()) break;
        std::string law;
        for (std::size_t k = i + 1; k < close; ++k) law += zh::encode(cps[k]);

        // Articles must follow the law name directly: 《...》第X条、第Y条.
        std::size_t pos = close + 1;
        while (pos < cps.size() && cps[pos] == kDi) {
            const std::size_t run = zh::numeral_run_length(cps, pos + 1);
            if (run == 0 || pos + 1 + run >= cps.size() || cps[pos + 1 + run] != kTiao) break;
            const auto num = zh::numeral_to_int(Cps(cps.begin() + pos + 1, cps.begin() + pos + 1 + run));
            if (!num || *num <= 0) break;
            out.push_back({law, *num});
            pos += 1 + run + 1;
            // Skip list separators before a possible next 第.
            while (pos < cps.size() && (cps[pos] == U'、' || cps[pos] == U'，' || cps[pos] == U'和' ||
                                        cps[pos] == U'及' || cps[pos] == U' ')) {
                ++pos;
            }
        }
        i = close;
    }
    return out;
}

}  // namespace courtsim
