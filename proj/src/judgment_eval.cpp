#include "courtsim/judgment_eval.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <map>
#include <set>
#include <sstream>

#include "courtsim/errors.hpp"
#include "courtsim/jsonl.hpp"
#include "courtsim/verdict.hpp"
#include "courtsim/zh_text.hpp"

namespace courtsim {

double hit_rate(const std::vector<EvalCase>& cases) {
    if (cases.empty()) throw EmptyInput("hit_rate over empty case list");
    const auto n = static_cast<long long>(cases.size());
    long long hits = 0;
#pragma omp parallel for schedule(static) reduction(+ : hits)
    for (long long i = 0; i < n; ++i) {
        const auto& c = cases[i];
        if (!c.truth_range || !c.predicted.imprisonment.is_numeric()) continue;
        const long long p = c.predicted.imprisonment.months;
        if (c.truth_range->lower <= p && p <= c.truth_range->upper) ++hits;
    }
    return static_cast<double>(hits) / static_cast<double>(cases.size());
}

namespace {

// Ratios are collected in input order and reduced serially so results do not
// depend on thread count.
std::optional<RelativeErrorResult> relative_error_or_empty(const std::vector<ErrorPair>& values) {
    std::vector<double> ratios;
    ratios.reserve(values.size());
    for (const auto& v : values) {
        if (!v.truth || *v.truth == 0.0 || !v.predicted) continue;
        ratios.push_back(std::abs(*v.predicted - *v.truth) / *v.truth);
    }
    if (ratios.empty()) return std::nullopt;
    double sum = 0.0;
    for (const double r : ratios) sum += r;
    const double mean = sum / static_cast<double>(ratios.size());
    double sq = 0.0;
    for (const double r : ratios) sq += (r - mean) * (r - mean);
    RelativeErrorResult out;
    out.mean = mean;
    out.stddev = std::sqrt(sq / static_cast<double>(ratios.size()));
    out.n_included = ratios.size();
    out.n_excluded = values.size() - ratios.size();
    return out;
}

}  // namespace

RelativeErrorResult relative_error(const std::vector<ErrorPair>& values) {
    auto result = relative_error_or_empty(values);
    if (!result) throw AllExcluded("relative_error: no includable (P, T) pair");
    return *result;
}

double binary_accuracy(const std::vector<std::pair<bool, bool>>& flags) {
    if (flags.empty()) throw EmptyInput("binary_accuracy over empty list");
    std::size_t agree = 0;
    for (const auto& [p, t] : flags) {
        if (p == t) ++agree;
    }
    return static_cast<double>(agree) / static_cast<double>(flags.size());
}

namespace {

// splitmix64; the resampling scheme is pinned, results must not depend on
// thread count.
inline std::uint64_t splitmix64_next(std::uint64_t& state) {
    state += 0x9E3779B97F4A7C15ULL;
    std::uint64_t z = state;
    z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
    z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
    return z ^ (z >> 31);
}

}  // namespace

SignificanceResult significance(const std::vector<double>& errors_a,
                                const std::vector<double>& errors_b, std::size_t resamples,
                                std::uint64_t seed, std::string aspect) {
    if (errors_a.size() != errors_b.size()) {
        throw LengthMismatch("significance: vectors differ in length");
    }
    if (errors_a.size() < 2) {
        throw LengthMismatch("significance: need at least 2 pairs");
    }
    const std::size_t n = errors_a.size();
    std::vector<double> diff(n);
    for (std::size_t i = 0; i < n; ++i) diff[i] = errors_a[i] - errors_b[i];
    double observed_sum = 0.0;
    for (const double d : diff) observed_sum += d;
    const double observed = std::abs(observed_sum / static_cast<double>(n));

    const auto r_count = static_cast<long long>(resamples);
    long long at_least = 0;
#pragma omp parallel for schedule(static) reduction(+ : at_least)
    for (long long r = 0; r < r_count; ++r) {
        std::uint64_t state = seed ^ (0x9E3779B97F4A7C15ULL * static_cast<std::uint64_t>(r + 1));
        double sum = 0.0;
        for (std::size_t i = 0; i < n; ++i) {
            const bool flip = (splitmix64_next(state) & 1ULL) != 0;
            sum += flip ? -diff[i] : diff[i];
        }
        if (std::abs(sum / static_cast<double>(n)) >= observed) ++at_least;
    }

    SignificanceResult out;
    out.aspect = std::move(aspect);
    out.p_value = static_cast<double>(1 + at_least) / static_cast<double>(1 + resamples);
    out.n_pairs = n;
    out.method = "paired-permutation";
    return out;
}

MetricsReport evaluate(const std::vector<EvalCase>& cases) {
    if (cases.empty()) throw EmptyInput("evaluate over empty case list");
    MetricsReport report;
    report.cases_total = cases.size();

    // Imprisonment
    {
        std::vector<ErrorPair> pairs;
        pairs.reserve(cases.size());
        for (const auto& c : cases) {
            ErrorPair p;
            if (c.predicted.imprisonment.is_numeric()) {
                p.predicted = static_cast<double>(c.predicted.imprisonment.months);
            }
            if (c.truth.imprisonment.is_numeric()) {
                p.truth = static_cast<double>(c.truth.imprisonment.months);
            }
            pairs.push_back(p);
        }
        report.imprisonment.relative_error = relative_error_or_empty(pairs);
        for (std::size_t i = 0; i < cases.size(); ++i) {
            const auto& p = pairs[i];
            if (!p.truth || *p.truth == 0.0 || !p.predicted) continue;
            report.imprisonment.per_case_errors.emplace_back(
                cases[i].case_id, std::abs(*p.predicted - *p.truth) / *p.truth);
        }
        report.imprisonment.categorical = hit_rate(cases);
        report.imprisonment.cat_included = cases.size();
        report.imprisonment.cat_excluded = 0;
    }

    // Probation: relative error over cases where both sides assign a positive
    // probation length; accuracy over applicability flags.
    {
        std::vector<ErrorPair> pairs;
        std::vector<std::pair<bool, bool>> flags;
        pairs.reserve(cases.size());
        flags.reserve(cases.size());
        for (const auto& c : cases) {
            ErrorPair p;
            if (c.predicted.probation_months && *c.predicted.probation_months > 0) {
                p.predicted = static_cast<double>(*c.predicted.probation_months);
            }
            if (c.truth.probation_months && *c.truth.probation_months > 0) {
                p.truth = static_cast<double>(*c.truth.probation_months);
            }
            pairs.push_back(p);
            flags.emplace_back(c.predicted.probation_applicable, c.truth.probation_applicable);
        }
        report.probation.relative_error = relative_error_or_empty(pairs);
        for (std::size_t i = 0; i < cases.size(); ++i) {
            const auto& p = pairs[i];
            if (!p.truth || *p.truth == 0.0 || !p.predicted) continue;
            report.probation.per_case_errors.emplace_back(
                cases[i].case_id, std::abs(*p.predicted - *p.truth) / *p.truth);
        }
        report.probation.categorical = binary_accuracy(flags);
        report.probation.cat_included = cases.size();
        report.probation.cat_excluded = 0;
    }

    // Fine: relative error over cases with a positive truth fine; an
    // inapplicable or missing predicted fine counts as 0 yuan.
    {
        std::vector<ErrorPair> pairs;
        std::vector<std::pair<bool, bool>> flags;
        pairs.reserve(cases.size());
        flags.reserve(cases.size());
        for (const auto& c : cases) {
            ErrorPair p;
            p.predicted = c.predicted.fine_applicable && c.predicted.fine_amount
                              ? static_cast<double>(*c.predicted.fine_amount)
                              : 0.0;
            if (c.truth.fine_applicable && c.truth.fine_amount && *c.truth.fine_amount > 0) {
                p.truth = static_cast<double>(*c.truth.fine_amount);
            }
            pairs.push_back(p);
            flags.emplace_back(c.predicted.fine_applicable, c.truth.fine_applicable);
        }
        report.fine.relative_error = relative_error_or_empty(pairs);
        for (std::size_t i = 0; i < cases.size(); ++i) {
            const auto& p = pairs[i];
            if (!p.truth || *p.truth == 0.0 || !p.predicted) continue;
            report.fine.per_case_errors.emplace_back(cases[i].case_id,
                                                     std::abs(*p.predicted - *p.truth) / *p.truth);
        }
        report.fine.categorical = binary_accuracy(flags);
        report.fine.cat_included = cases.size();
        report.fine.cat_excluded = 0;
    }
    return report;
}

namespace {

std::string format_fixed(double v, int precision = 3) {
    char buf[64];
    std::snprintf(buf, sizeof(buf), "%.*f", precision, v);
    return buf;
}

// Pads to a display width; ± is multi-byte UTF-8 but one display column.
std::string pad_display(const std::string& s, std::size_t width) {
    std::size_t display = 0;
    for (std::size_t i = 0; i < s.size();) {
        const auto b = static_cast<unsigned char>(s[i]);
        i += b < 0x80 ? 1 : (b & 0xE0) == 0xC0 ? 2 : (b & 0xF0) == 0xE0 ? 3 : 4;
        ++display;
    }
    std::string out = s;
    while (display < width) {
        out.push_back(' ');
        ++display;
    }
    return out;
}

std::string pad_right_int(std::size_t v, std::size_t width) {
    std::string s = std::to_string(v);
    while (s.size() < width) s.insert(s.begin(), ' ');
    return s;
}

void append_metric_row(std::string& out, const std::string& aspect, const std::string& metric,
                       const std::string& value, std::size_t n_inc, std::size_t n_exc) {
    out += pad_display(aspect, 12);
    out += "  ";
    out += pad_display(metric, 14);
    out += "  ";
    out += pad_display(value, 12);
    out += "  ";
    out += pad_right_int(n_inc, 10);
    out += "  ";
    out += pad_right_int(n_exc, 10);
    out += "\n";
}

void append_aspect(std::string& out, const std::string& name, const AspectMetrics& m,
                   const std::string& categorical_name, std::size_t cases_total) {
    if (m.relative_error) {
        append_metric_row(out, name, "relative_error",
                          format_fixed(m.relative_error->mean) + "±" +
                              format_fixed(m.relative_error->stddev),
                          m.relative_error->n_included, m.relative_error->n_excluded);
    } else {
        append_metric_row(out, name, "relative_error", "-", 0, cases_total);
    }
    append_metric_row(out, name, categorical_name, format_fixed(m.categorical), m.cat_included,
                      m.cat_excluded);
}

}  // namespace

std::string render_metrics_report(const MetricsReport& report) {
    std::string out;
    out += "Judgment Evaluation Report\n";
    out += "cases_total: " + std::to_string(report.cases_total) + "\n";
    out += "\n";
    out += pad_display("aspect", 12) + "  " + pad_display("metric", 14) + "  " +
           pad_display("value", 12) + "  " + "n_included" + "  " + "n_excluded" + "\n";
    append_aspect(out, "imprisonment", report.imprisonment, "hit_rate", report.cases_total);
    append_aspect(out, "probation", report.probation, "accuracy", report.cases_total);
    append_aspect(out, "fine", report.fine, "accuracy", report.cases_total);
    return out;
}

std::string render_metrics_json(const MetricsReport& report,
                                const std::vector<SignificanceResult>& significance) {
    using ordered_json = nlohmann::ordered_json;
    ordered_json j;
    j["cases_total"] = report.cases_total;
    const std::pair<const char*, const AspectMetrics*> aspects[] = {
        {"imprisonment", &report.imprisonment},
        {"probation", &report.probation},
        {"fine", &report.fine}};
    for (const auto& [name, metrics] : aspects) {
        ordered_json ja;
        if (metrics->relative_error) {
            ja["relative_error"] = {{"mean", metrics->relative_error->mean},
                                    {"stddev", metrics->relative_error->stddev},
                                    {"n_included", metrics->relative_error->n_included},
                                    {"n_excluded", metrics->relative_error->n_excluded}};
        } else {
            ja["relative_error"] = nullptr;
        }
        ja[std::string(name) == "imprisonment" ? "hit_rate" : "accuracy"] = metrics->categorical;
        j[name] = std::move(ja);
    }
    if (!significance.empty()) {
        j["significance"] = ordered_json::array();
        for (const auto& r : significance) {
            j["significance"].push_back({{"aspect", r.aspect},
                                         {"metric", "relative_error"},
                                         {"p_value", r.p_value},
                                         {"n_pairs", r.n_pairs},
                                         {"method", r.method}});
        }
    }
    return j.dump(2) + "\n";
}

std::string render_significance(const std::vector<SignificanceResult>& results,
                                std::size_t resamples, std::uint64_t seed) {
    std::string out;
    out += "\n";
    out += "Significance vs. system B (two-sided paired permutation, " +
           std::to_string(resamples) + " resamples, seed " + std::to_string(seed) + ")\n";
    out += pad_display("aspect", 12) + "  " + pad_display("metric", 14) + "  ";
    out += " p_value   n_pairs  marker\n";
    for (const auto& r : results) {
        out += pad_display(r.aspect, 12);
        out += "  ";
        out += pad_display("relative_error", 14);
        out += "  ";
        out += format_fixed(r.p_value, 6);
        out += "  ";
        out += pad_right_int(r.n_pairs, 8);
        const char* marker = r.p_value < 0.01 ? "  **" : (r.p_value < 0.05 ? "  *" : "");
        out += marker;
        out += "\n";
    }
    return out;
}

// ---------------------------------------------------------------------------
// Extraction

namespace {

using Cps = std::vector<char32_t>;

std::size_t find_cps(const Cps& cps, const Cps& pat, std::size_t from = 0) {
    if (pat.empty() || pat.size() > cps.size()) return std::string::npos;
    for (std::size_t i = from; i + pat.size() <= cps.size(); ++i) {
        bool ok = true;
        for (std::size_t k = 0; k < pat.size(); ++k) {
            if (cps[i + k] != pat[k]) {
                ok = false;
                break;
            }
        }
        if (ok) return i;
    }
    return std::string::npos;
}

std::string encode_range(const Cps& cps, std::size_t from, std::size_t count) {
    std::string out;
    for (std::size_t i = from; i < cps.size() && i < from + count; ++i) out += zh::encode(cps[i]);
    return out;
}

// Months parsed from a leading "X年[零]Y个月" / "X个月" span, if any.
std::optional<long long> leading_month_span(const std::string& text) {
    try {
        const auto term = parse_duration("有期徒刑" + text);
        if (term.kind == ImprisonmentTerm::Kind::Months) return term.months;
        return std::nullopt;
    } catch (const UnparseableDuration&) {
        return std::nullopt;
    }
}

}  // namespace

Judgment extract_judgment(const std::string& document) {
    std::string warning;
    if (auto from_block = parse_verdict_block(document, &warning)) {
        return *from_block;
    }

    const Cps cps = zh::codepoints(document);
    const Cps decide_exec = zh::codepoints("决定执行");
    const Cps sentence_kw = zh::codepoints("判处");
    const Cps probation_kw = zh::codepoints("缓刑");
    const Cps fine_kw = zh::codepoints("罚金");
    const Cps rmb = zh::codepoints("人民币");
    const Cps negation = zh::codepoints("不");

    // Imprisonment: prefer the aggregated term after 决定执行, then the text
    // after the last 判处, then the whole document.
    std::optional<ImprisonmentTerm> term;
    auto try_parse = [&](const std::string& text) {
        if (term) return;
        try {
            term = parse_duration(text);
        } catch (const UnparseableDuration&) {
        }
    };
    if (const auto at = find_cps(cps, decide_exec); at != std::string::npos) {
        try_parse(encode_range(cps, at + decide_exec.size(), 40));
    }
    std::size_t last_sentence = std::string::npos;
    for (std::size_t at = find_cps(cps, sentence_kw); at != std::string::npos;
         at = find_cps(cps, sentence_kw, at + 1)) {
        last_sentence = at;
    }
    if (last_sentence != std::string::npos) {
        try_parse(encode_range(cps, last_sentence + sentence_kw.size(), 40));
    }
    try_parse(document);
    if (!term) {
        throw ExtractionFailure("no imprisonment term found in document");
    }

    // Probation: 缓刑 not preceded by a negation within 3 codepoints.
    bool probation = false;
    std::optional<long long> probation_months;
    for (std::size_t at = find_cps(cps, probation_kw); at != std::string::npos;
         at = find_cps(cps, probation_kw, at + 1)) {
        bool negated = false;
        const std::size_t lookback = at >= 3 ? at - 3 : 0;
        for (std::size_t i = lookback; i < at; ++i) {
            if (cps[i] == negation[0]) negated = true;
        }
        if (negated) continue;
        probation = true;
        if (!probation_months) {
            // 缓刑考验期限X / 缓刑X: scan forward past connective words.
            std::size_t start = at + probation_kw.size();
            const Cps period_kw = zh::codepoints("考验期限");
            if (find_cps(cps, period_kw, start) == start) start += period_kw.size();
            else if (start < cps.size() && cps[start] == U'为') ++start;
            const auto months = leading_month_span(encode_range(cps, start, 20));
            if (months && *months > 0) probation_months = months;
        }
    }

    // Fine: 罚金 followed (within a short window) by an amount in 元.
    bool fine = false;
    std::optional<long long> fine_amount;
    for (std::size_t at = find_cps(cps, fine_kw); at != std::string::npos;
         at = find_cps(cps, fine_kw, at + 1)) {
        fine = true;
        if (!fine_amount) {
            try {
                fine_amount = parse_amount(encode_range(cps, at + fine_kw.size(), 24));
            } catch (const UnparseableAmount&) {
            }
        }
    }

    return make_judgment(*term, probation, probation_months, fine, fine_amount, {},
                         extract_cited_articles(document));
}

// ---------------------------------------------------------------------------
// Prediction / truth files

namespace {

ImprisonmentTerm term_from_value(const jsonl::ordered_json& v, const std::string& where) {
    if (v.is_number_integer()) {
        const long long months = v.get<long long>();
        if (months < 0) throw MalformedRecord(where + ": negative imprisonment months");
        return ImprisonmentTerm::of_months(months);
    }
    if (v.is_string()) {
        if (const auto t = term_from_string(v.get<std::string>())) return *t;
    }
    throw MalformedRecord(where + ": unparseable imprisonment value");
}

// probation / fine values: "无" (not applicable), "适用" (applicable, value
// unknown), or a positive integer.
std::pair<bool, std::optional<long long>> flag_from_value(const jsonl::ordered_json& v,
                                                          const std::string& where) {
    if (v.is_null()) return {false, std::nullopt};
    if (v.is_number_integer()) {
        const long long n = v.get<long long>();
        if (n < 0) throw MalformedRecord(where + ": negative value");
        if (n == 0) return {false, std::nullopt};
        return {true, n};
    }
    if (v.is_string()) {
        const auto s = v.get<std::string>();
        if (s == "无") return {false, std::nullopt};
        if (s == "适用") return {true, std::nullopt};
    }
    throw MalformedRecord(where + ": unparseable probation/fine value");
}

}  // namespace

std::vector<PredictionRecord> load_prediction_file(const std::string& path) {
    std::vector<PredictionRecord> out;
    jsonl::for_each_record(path, [&](std::size_t lineno, const jsonl::ordered_json& j) {
        const std::string where = path + ":" + std::to_string(lineno);
        PredictionRecord rec;
        try {
            rec.case_id = j.at("case_id").get<std::string>();
        } catch (const std::exception&) {
            throw MalformedRecord(where + ": missing case_id");
        }
        if (!j.contains("imprisonment")) throw MalformedRecord(where + ": missing imprisonment");
        const auto term = term_from_value(j.at("imprisonment"), where);
        const auto [prob_flag, prob_months] =
            flag_from_value(j.contains("probation") ? j.at("probation") : jsonl::ordered_json(nullptr),
                            where);
        const auto [fine_flag, fine_amount] =
            flag_from_value(j.contains("fine") ? j.at("fine") : jsonl::ordered_json(nullptr), where);
        rec.judgment = make_judgment(term, prob_flag, prob_months, fine_flag, fine_amount);
        if (j.contains("range")) {
            StatutoryRange r;
            r.lower = j.at("range").at("lower").get<long long>();
            r.upper = j.at("range").at("upper").get<long long>();
            if (r.lower < 0 || r.lower > r.upper) {
                throw MalformedRecord(where + ": invalid statutory range");
            }
            rec.range = r;
        }
        out.push_back(std::move(rec));
    });
    return out;
}

std::vector<EvalCase> align_cases(const std::vector<PredictionRecord>& predictions,
                                  const std::vector<PredictionRecord>& truths) {
    std::map<std::string, const PredictionRecord*> by_id;
    for (const auto& p : predictions) by_id[p.case_id] = &p;

    std::vector<std::string> missing, extra;
    std::set<std::string> truth_ids;
    std::vector<EvalCase> out;
    for (const auto& t : truths) {
        truth_ids.insert(t.case_id);
        const auto it = by_id.find(t.case_id);
        if (it == by_id.end()) {
            missing.push_back(t.case_id);
            continue;
        }
        EvalCase c;
        c.case_id = t.case_id;
        c.predicted = it->second->judgment;
        c.truth = t.judgment;
        c.truth_range = t.range;
        if (c.truth.imprisonment.is_numeric() && !c.truth_range) {
            throw MalformedRecord("truth case " + t.case_id + " has numeric imprisonment but no range");
        }
        out.push_back(std::move(c));
    }
    for (const auto& p : predictions) {
        if (!truth_ids.count(p.case_id)) extra.push_back(p.case_id);
    }
    if (!missing.empty() || !extra.empty()) {
        std::ostringstream msg;
        msg << "prediction/truth case_id mismatch;";
        if (!missing.empty()) {
            msg << " missing predictions for:";
            for (const auto& id : missing) msg << " " << id;
            msg << ";";
        }
        if (!extra.empty()) {
            msg << " predictions without truth:";
            for (const auto& id : extra) msg << " " << id;
        }
        throw AlignmentError(msg.str());
    }
    return out;
}

}  // namespace courtsim
