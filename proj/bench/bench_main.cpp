// Benchmark comparing the OpenMP kernels against their serial reference
// implementations: permutation significance test, metric evaluation, and
// BM25 search. Build and run:
//   cmake --build build --target courtsim_bench && build/bench/courtsim_bench

#include <chrono>
#include <cmath>
#include <cstdio>
#include <string>
#include <vector>

#ifdef _OPENMP
#include <omp.h>
#endif

#include "courtsim/judgment_eval.hpp"
#include "courtsim/retrieval.hpp"
#include "reference.hpp"

using namespace courtsim;

namespace {

std::uint64_t g_state = 0xBE7C4;
std::uint64_t next_u64() {
    g_state += 0x9E3779B97F4A7C15ULL;
    std::uint64_t z = g_state;
    z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
    z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
    return z ^ (z >> 31);
}

template <typename Fn>
double time_ms(Fn&& fn) {
    const auto started = std::chrono::steady_clock::now();
    fn();
    return std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - started)
        .count();
}

void report(const char* name, double serial_ms, double parallel_ms, bool equal) {
    std::printf("%-28s serial %9.2f ms   parallel %9.2f ms   speedup %5.2fx   %s\n", name,
                serial_ms, parallel_ms, serial_ms / parallel_ms, equal ? "results equal" : "MISMATCH");
}

}  // namespace

int main() {
#ifdef _OPENMP
    std::printf("OpenMP enabled, max threads: %d\n\n", omp_get_max_threads());
#else
    std::printf("built without OpenMP; parallel kernels run serially\n\n");
#endif

    // permutation test: n=200 pairs, 200k resamples
    {
        std::vector<double> a, b;
        for (int i = 0; i < 200; ++i) {
            a.push_back(static_cast<double>(next_u64() % 1000) / 500.0);
            b.push_back(static_cast<double>(next_u64() % 1000) / 450.0);
        }
        const std::size_t resamples = 200000;
        double p_serial = 0.0, p_parallel = 0.0;
        const double serial_ms =
            time_ms([&] { p_serial = reference::permutation_p(a, b, resamples, 42); });
        const double parallel_ms =
            time_ms([&] { p_parallel = significance(a, b, resamples, 42).p_value; });
        report("permutation test", serial_ms, parallel_ms, p_serial == p_parallel);
    }

    // metric evaluation: 2M synthetic cases
    {
        const std::size_t n = 2000000;
        std::vector<EvalCase> cases;
        cases.reserve(n);
        for (std::size_t i = 0; i < n; ++i) {
            EvalCase c;
            c.case_id = "b";
            const long long truth = 6 + static_cast<long long>(next_u64() % 120);
            long long predicted = truth + static_cast<long long>(next_u64() % 24) - 12;
            if (predicted < 0) predicted = 0;
            c.predicted = make_judgment(ImprisonmentTerm::of_months(predicted), false, {}, false, {});
            c.truth = make_judgment(ImprisonmentTerm::of_months(truth), false, {}, false, {});
            c.truth_range = StatutoryRange{truth - 6, truth + 6};
            cases.push_back(std::move(c));
        }
        double serial_value = 0.0, parallel_value = 0.0;
        const double serial_ms = time_ms([&] { serial_value = reference::hit_rate(cases); });
        const double parallel_ms = time_ms([&] { parallel_value = hit_rate(cases); });
        report("hit rate (2M cases)", serial_ms, parallel_ms, serial_value == parallel_value);
    }

    // BM25: 20k documents, 20 queries
    {
        const char* vocab[] = {"盗窃", "诈骗", "伤害", "驾驶", "赌博", "财物", "证据", "判决",
                               "罚金", "缓刑", "证人", "现场", "监控", "退赔", "谅解", "供述"};
        std::vector<CaseRecord> docs;
        CaseCorpus corpus;
        for (int d = 0; d < 20000; ++d) {
            std::string facts;
            const int len = 10 + static_cast<int>(next_u64() % 40);
            for (int w = 0; w < len; ++w) facts += vocab[next_u64() % 16];
            CaseRecord r{"doc_" + std::to_string(d), "", facts, ""};
            docs.push_back(r);
            corpus.add_record(r);
        }
        std::vector<std::string> queries;
        for (int q = 0; q < 20; ++q) {
            std::string query;
            for (int w = 0; w < 3; ++w) query += vocab[next_u64() % 16];
            queries.push_back(query);
        }
        bool equal = true;
        double serial_ms = 0.0, parallel_ms = 0.0;
        for (const auto& query : queries) {
            std::vector<reference::ScoredDoc> expected;
            serial_ms += time_ms([&] { expected = reference::bm25_rank(docs, query); });
            std::vector<SearchHit> hits;
            parallel_ms += time_ms([&] { hits = corpus.search(query, docs.size()); });
            for (std::size_t i = 0; i < hits.size(); ++i) {
                if (hits[i].record->case_id != expected[i].case_id ||
                    std::abs(hits[i].score - expected[i].score) > 1e-9) {
                    equal = false;
                    break;
                }
            }
        }
        report("bm25 search (20k docs x20)", serial_ms, parallel_ms, equal);
    }
    return 0;
}
