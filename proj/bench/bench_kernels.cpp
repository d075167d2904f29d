// Parallel kernels against their serial references.

#include <benchmark/benchmark.h>

#include <filesystem>
#include <map>
#include <random>

#include "dualgraph/corpus.hpp"
#include "dualgraph/datalog.hpp"
#include "dualgraph/skg.hpp"
#include "dualgraph/sparql.hpp"
#include "dualgraph/vecindex.hpp"

using namespace dualgraph;

namespace {

Vector random_vector(std::mt19937& rng, std::size_t dim) {
    std::normal_distribution<float> d;
    Vector v(dim);
    for (auto& x : v) x = d(rng);
    return v;
}

const EmbeddingIndex& index_of(std::size_t n) {
    static std::map<std::size_t, EmbeddingIndex> cache;
    auto it = cache.find(n);
    if (it != cache.end()) return it->second;
    std::mt19937 rng(17);
    EmbeddingIndex idx(256);
    for (std::size_t i = 0; i < n; ++i) idx.upsert("k" + std::to_string(i), random_vector(rng, 256));
    return cache.emplace(n, std::move(idx)).first->second;
}

// Base graph of a generated corpus, before rules.
const Graph& base_graph() {
    static const Graph g = [] {
        auto dir = std::filesystem::temp_directory_path() / "dualgraph_bench_corpus";
        std::filesystem::remove_all(dir);
        gen_fixture_corpus(60, 11, dir);
        auto corpus = load_corpus(dir).corpus;
        std::filesystem::remove_all(dir);
        return build_skg(corpus);
    }();
    return g;
}

const Graph& enriched_graph() {
    static const Graph g = datalog::apply_rules(base_graph(), datalog::default_rules());
    return g;
}

const std::vector<std::string>& candidates() {
    static const std::vector<std::string> q = {
        "SELECT DISTINCT ?p WHERE { ?p skg:hasFeature skg:5g_support . }",
        "SELECT DISTINCT ?p WHERE { ?p skg:hasSpec ?s . ?s skg:inEntry skg:battery_capacity . "
        "?s skg:hasNumericValue ?n . FILTER(?n > 4500) }",
        "SELECT ?r (AVG(?n) AS ?avg) WHERE { ?p skg:variantOf ?r . ?p skg:hasSpec ?s . "
        "?s skg:hasNumericValue ?n } GROUP BY ?r ORDER BY DESC(?avg)",
        "SELECT ?p ?e ?v WHERE { ?p skg:hasSpec ?s . ?s skg:inEntry ?e . ?s skg:hasValue ?v . }",
    };
    return q;
}

void BM_VectorSearch(benchmark::State& state) {
    const auto& idx = index_of(static_cast<std::size_t>(state.range(0)));
    std::mt19937 rng(5);
    auto q = random_vector(rng, 256);
    for (auto _ : state) benchmark::DoNotOptimize(idx.search(q, 20));
    state.SetItemsProcessed(state.iterations() * state.range(0));
}

void BM_VectorSearchSerial(benchmark::State& state) {
    const auto& idx = index_of(static_cast<std::size_t>(state.range(0)));
    std::mt19937 rng(5);
    auto q = random_vector(rng, 256);
    for (auto _ : state) benchmark::DoNotOptimize(idx.search_serial(q, 20));
    state.SetItemsProcessed(state.iterations() * state.range(0));
}

void apply(benchmark::State& state, bool parallel) {
    const auto& g = base_graph();
    datalog::ApplyOptions opts;
    opts.parallel = parallel;
    for (auto _ : state) {
        auto out = datalog::apply_rules(g, datalog::default_rules(), opts);
        benchmark::DoNotOptimize(out.size());
    }
}

void BM_ApplyRules(benchmark::State& state) { apply(state, true); }
void BM_ApplyRulesSerial(benchmark::State& state) { apply(state, false); }

void candidates_bench(benchmark::State& state, bool parallel) {
    const auto& g = enriched_graph();
    for (auto _ : state) benchmark::DoNotOptimize(sparql::run_candidates(g, candidates(), {}, parallel));
}

void BM_RunCandidates(benchmark::State& state) { candidates_bench(state, true); }
void BM_RunCandidatesSerial(benchmark::State& state) { candidates_bench(state, false); }

}  // namespace

BENCHMARK(BM_VectorSearch)->Arg(1000)->Arg(20000);
BENCHMARK(BM_VectorSearchSerial)->Arg(1000)->Arg(20000);
BENCHMARK(BM_ApplyRules)->Unit(benchmark::kMillisecond);
BENCHMARK(BM_ApplyRulesSerial)->Unit(benchmark::kMillisecond);
BENCHMARK(BM_RunCandidates)->Unit(benchmark::kMillisecond);
BENCHMARK(BM_RunCandidatesSerial)->Unit(benchmark::kMillisecond);

BENCHMARK_MAIN();
