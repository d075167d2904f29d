#include <gtest/gtest.h>
#include <unistd.h>

#include <filesystem>
#include <set>

#include "dualgraph/corpus.hpp"
#include "dualgraph/eval.hpp"
#include "dualgraph/pipeline.hpp"
#include "dualgraph/text.hpp"

namespace fs = std::filesystem;
using namespace dualgraph;
using nlohmann::json;

namespace {

Term n(std::string_view id) { return Term::iri(vocab::node(id)); }

json record(std::string id) {
    return {{"id", std::move(id)}, {"question", "Q?"}, {"category", "inverse"}, {"answer_text", "A."}};
}

struct Env {
    fs::path dir;
    std::vector<QAItem> items;
    std::unique_ptr<llm::MockProvider> mock;
    llm::UsageAccumulator usage;
    std::unique_ptr<llm::LlmClient> client;
    BuiltIndexes built;
};

Env& env() {
    static std::unique_ptr<Env> e = [] {
        auto e = std::make_unique<Env>();
        e->dir = fs::temp_directory_path() / ("dualgraph_eval_fixture_" + std::to_string(::getpid()));
        fs::remove_all(e->dir);
        gen_fixture_corpus(10, 7, e->dir);
        e->items = load_benchmark((e->dir / "benchmark.json").string());
        e->mock = std::make_unique<llm::MockProvider>(llm::MockProvider::from_file((e->dir / "mock_script.json").string()));
        e->client = std::make_unique<llm::LlmClient>(*e->mock, e->usage);
        e->built = build_in_memory(load_corpus(e->dir).corpus, *e->client);
        return e;
    }();
    return *e;
}

}  // namespace

TEST(Benchmark, Categories) {
    for (auto c : {QuestionCategory::Inverse, QuestionCategory::MultiCondition, QuestionCategory::GroupComparison,
                   QuestionCategory::Reasoning})
        EXPECT_EQ(parse_category(category_name(c)), c);
    EXPECT_EQ(category_name(QuestionCategory::MultiCondition), "multi_condition");
    EXPECT_FALSE(parse_category("Inverse"));
}

TEST(Benchmark, ParseCanonicalizes) {
    json j = json::array({
        {{"id", "x1"},
         {"question", "Which?"},
         {"category", "multi_condition"},
         {"answer_list", {"Galaxy S25 Ultra", "galaxy  s25 ultra", "Galaxy Tab S10"}},
         {"objective", false}},
        record("x2"),
    });
    auto items = parse_benchmark(j);
    ASSERT_EQ(items.size(), 2u);
    EXPECT_EQ(items[0].answer_list, (std::vector<std::string>{"galaxy_s25_ultra", "galaxy_tab_s10"}));
    EXPECT_FALSE(items[0].answer_text);
    EXPECT_FALSE(items[0].objective);
    EXPECT_EQ(items[0].category, QuestionCategory::MultiCondition);
    EXPECT_TRUE(items[1].objective);
    EXPECT_EQ(items[1].answer_text, "A.");
    EXPECT_FALSE(items[1].answer_list);
}

TEST(Benchmark, ParseRejects) {
    EXPECT_THROW(parse_benchmark(json::object()), EvalError);
    EXPECT_THROW(parse_benchmark(json::array({record("a"), record("a")})), EvalError);
    auto no_gold = record("a");
    no_gold.erase("answer_text");
    EXPECT_THROW(parse_benchmark(json::array({no_gold})), EvalError);
    auto null_gold = record("a");
    null_gold["answer_text"] = nullptr;
    EXPECT_THROW(parse_benchmark(json::array({null_gold})), EvalError);
    auto no_cat = record("a");
    no_cat.erase("category");
    EXPECT_THROW(parse_benchmark(json::array({no_cat})), EvalError);
    auto bad_cat = record("a");
    bad_cat["category"] = "trivia";
    EXPECT_THROW(parse_benchmark(json::array({bad_cat})), EvalError);
    auto bad_name = record("a");
    bad_name["answer_list"] = {"!!!"};
    EXPECT_THROW(parse_benchmark(json::array({bad_name})), EvalError);
    auto no_question = record("a");
    no_question.erase("question");
    EXPECT_THROW(parse_benchmark(json::array({no_question})), EvalError);
    EXPECT_THROW(load_benchmark("/nonexistent/benchmark.json"), std::exception);
}

TEST(ListMatch, SetSemantics) {
    auto m = list_match({"a", "b", "b", "x"}, {"a", "b", "c", "d"});
    EXPECT_DOUBLE_EQ(m.precision, 2.0 / 3.0);
    EXPECT_DOUBLE_EQ(m.recall, 0.5);
    EXPECT_DOUBLE_EQ(m.f1, 2 * (2.0 / 3.0) * 0.5 / (2.0 / 3.0 + 0.5));
    auto none = list_match({}, {"a"});
    EXPECT_EQ(none.precision, 0.0);
    EXPECT_EQ(none.f1, 0.0);
    auto exact = list_match({"b", "a"}, {"a", "b"});
    EXPECT_EQ(exact.f1, 1.0);
    EXPECT_EQ(make_prf(0, 0).f1, 0.0);
    EXPECT_DOUBLE_EQ(make_prf(1, 0.5).f1, 2.0 / 3.0);
}

TEST(ListMatch, CollapseToRanges) {
    Graph g;
    g.insert(n("s25"), vocab::kVariantOf, n("galaxy_s"));
    g.insert(n("s25_ultra"), vocab::kVariantOf, n("galaxy_s"));
    g.insert(n("a56"), vocab::kVariantOf, n("galaxy_a"));
    std::vector<std::string> pred = {"s25", "s25_ultra", "a56", "other"};
    // Only ranges named in the gold list replace their products.
    EXPECT_EQ(collapse_to_ranges(pred, {"galaxy_s", "a56"}, g),
              (std::vector<std::string>{"galaxy_s", "galaxy_s", "a56", "other"}));
    EXPECT_EQ(collapse_to_ranges(pred, {"s25"}, g), pred);
    EXPECT_EQ(list_match(collapse_to_ranges(pred, {"galaxy_s", "galaxy_a"}, g), {"galaxy_s", "galaxy_a"}).recall, 1.0);
}

TEST(Factual, ParseClaims) {
    EXPECT_EQ(parse_claims("- one\n  - two \n-\nnoise\n- "), (std::vector<std::string>{"one", "two"}));
    EXPECT_EQ(parse_claims("  none \n"), std::vector<std::string>{});
    EXPECT_FALSE(parse_claims("no bullets here"));
    EXPECT_FALSE(parse_claims(""));
}

TEST(Factual, ParseVerdicts) {
    EXPECT_EQ(parse_verdicts("1: SUPPORTED\n2: unsupported\n3: supported", 3), (std::vector<bool>{true, false, true}));
    // Out-of-range and malformed lines are ignored; missing ones count as unsupported.
    EXPECT_EQ(parse_verdicts("7: SUPPORTED\nx: SUPPORTED\n2: SUPPORTED", 3), (std::vector<bool>{false, true, false}));
    EXPECT_FALSE(parse_verdicts("1: MAYBE\n0: SUPPORTED", 2));
    EXPECT_FALSE(parse_verdicts("", 1));
}

TEST(Factual, ScoresFromScriptedCalls) {
    // Answer: 3 claims, 2 supported by gold. Gold: 4 claims, 1 supported by the answer.
    llm::MockProvider mock(json{
        {"decompose", {{"f1", {"- a1\n- a2\n- a3", "- g1\n- g2\n- g3\n- g4"}}, {"f2", "gibberish"}, {"f3", "NONE"}}},
        {"verify", {{"f1", {"1: SUPPORTED\n2: UNSUPPORTED\n3: SUPPORTED", "4: SUPPORTED"}}, {"f3", "???"}}},
    });
    llm::UsageAccumulator acc;
    llm::Trace trace;
    llm::LlmClient client(mock, acc);
    auto r = factual_correctness(client, "f1", "answer text", "gold text", &trace);
    ASSERT_TRUE(r.scores);
    EXPECT_EQ(r.answer_claims, 3u);
    EXPECT_EQ(r.gold_claims, 4u);
    EXPECT_EQ(r.answer_supported, 2u);
    EXPECT_EQ(r.gold_supported, 1u);
    EXPECT_DOUBLE_EQ(r.scores->precision, 2.0 / 3.0);
    EXPECT_DOUBLE_EQ(r.scores->recall, 0.25);
    EXPECT_DOUBLE_EQ(r.scores->f1, 2 * (2.0 / 3.0) * 0.25 / (2.0 / 3.0 + 0.25));
    EXPECT_EQ(trace.count("chat:decompose"), 2u);
    EXPECT_EQ(trace.count("chat:verify"), 2u);
    EXPECT_EQ(acc.calls(llm::Phase::Evaluation), 4u);

    auto bad = factual_correctness(client, "f2", "answer", "gold");
    EXPECT_FALSE(bad.scores);
    EXPECT_NE(bad.diagnostic.find("decomposition"), std::string::npos);

    // Both sides decompose to nothing, so no verification call is needed.
    auto empty_claims = factual_correctness(client, "f3", "answer", "gold");
    ASSERT_TRUE(empty_claims.scores);
    EXPECT_EQ(empty_claims.scores->f1, 0.0);

    auto blank = factual_correctness(client, "f1", "   ", "gold");
    ASSERT_TRUE(blank.scores);
    EXPECT_EQ(blank.scores->f1, 0.0);
    // f2 and f3 each decompose both sides; the blank answer makes no call.
    EXPECT_EQ(acc.calls(llm::Phase::Evaluation), 4u + 2u + 2u);
}

TEST(Judge, VerdictsAndPositionSwap) {
    EXPECT_EQ(parse_judge_verdict(" A. "), 'A');
    EXPECT_EQ(parse_judge_verdict("b"), 'B');
    EXPECT_FALSE(parse_judge_verdict("A or B"));
    EXPECT_FALSE(parse_judge_verdict("C"));
    EXPECT_FALSE(parse_judge_verdict(""));

    // Always preferring the first position splits the two orders.
    llm::MockProvider always_first;
    llm::UsageAccumulator acc;
    llm::LlmClient c1(always_first, acc);
    auto j = pairwise_judge(c1, "q", "Q?", "x", "y");
    EXPECT_EQ(j.wins_a, 1u);
    EXPECT_EQ(j.wins_b, 1u);
    EXPECT_EQ(j.no_contest, 0u);
    EXPECT_EQ(j.win_rate_a(), 0.5);

    llm::MockProvider scripted(json{{"judge", {{"q", {"B", "A"}}, {"r", {"A", "no idea"}}}}});
    llm::LlmClient c2(scripted, acc);
    auto b = pairwise_judge(c2, "q", "Q?", "x", "y");
    EXPECT_EQ(b.wins_b, 2u);
    EXPECT_EQ(b.win_rate_b(), 1.0);
    auto r = pairwise_judge(c2, "r", "Q?", "x", "y");
    EXPECT_EQ(r.wins_a, 1u);
    EXPECT_EQ(r.no_contest, 1u);
    EXPECT_EQ(JudgeResult{}.win_rate_a(), 0.0);
}

TEST(RunBenchmark, SummaryAgreesWithRuns) {
    auto& e = env();
    Orchestrator orch(e.built.view(), *e.client);
    BenchmarkOptions opts;
    opts.strategies = {Strategy::SkgOnly, Strategy::SkgTkgFallback};
    opts.repeats = 2;
    llm::Trace eval_trace;
    auto report = run_benchmark(e.items, orch, *e.client, opts, &e.built.skg, &eval_trace);

    const std::size_t n_items = e.items.size();
    ASSERT_EQ(report.runs.size(), 2 * n_items * 2);
    for (std::size_t s = 0; s < 2; ++s)
        for (std::size_t i = 0; i < n_items; ++i)
            for (std::size_t r = 0; r < 2; ++r) {
                const auto& run = report.runs[(s * n_items + i) * 2 + r];
                EXPECT_EQ(run.qid, e.items[i].id);
                EXPECT_EQ(run.strategy, opts.strategies[s]);
                EXPECT_EQ(run.repeat, r);
                EXPECT_EQ(run.error, "");
                EXPECT_EQ(run.lm.has_value(), e.items[i].answer_list.has_value());
                EXPECT_EQ(run.fc.scores.has_value() || !run.fc.diagnostic.empty(), e.items[i].answer_text.has_value());
            }

    // Independent recomputation of list-match means from the per-run scores.
    for (std::size_t s = 0; s < 2; ++s) {
        const auto* sum = report.find(opts.strategies[s]);
        ASSERT_NE(sum, nullptr);
        double total = 0;
        std::size_t counted = 0, fallbacks = 0;
        for (std::size_t i = 0; i < n_items; ++i) {
            const auto& r0 = report.runs[(s * n_items + i) * 2];
            const auto& r1 = report.runs[(s * n_items + i) * 2 + 1];
            fallbacks += r0.record.fallback_used + r1.record.fallback_used;
            if (!r0.lm) continue;
            total += (r0.lm->f1 + r1.lm->f1) / 2;
            ++counted;
        }
        ASSERT_EQ(counted, 3u);
        ASSERT_TRUE(sum->lm_f1);
        EXPECT_NEAR(*sum->lm_f1, total / 3, 1e-12);
        EXPECT_NEAR(*sum->obj_lm_f1, total / 3, 1e-12);
        EXPECT_EQ(sum->fallbacks, fallbacks);
        EXPECT_EQ(sum->lm_f1_by_category.size(), 2u);
        EXPECT_EQ(sum->lm_f1_by_category.at("inverse"), report.runs[s * n_items * 2].lm->f1);
        // The mock judge always picks the first position.
        ASSERT_TRUE(sum->laaj);
        EXPECT_EQ(*sum->laaj, 0.5);
        EXPECT_GT(sum->querying.total(), 0u);
    }
    // The fixture's inverse question is answered exactly by the symbolic route.
    EXPECT_EQ(report.runs[0].lm->f1, 1.0);
    EXPECT_EQ(report.find(Strategy::SkgOnly)->fallbacks, 0u);
    EXPECT_EQ(report.find(Strategy::SkgTkgFallback)->fallbacks, 2u);
    EXPECT_EQ(report.find(Strategy::Agentic), nullptr);
    EXPECT_EQ(report.judge.at(Strategy::SkgOnly).decided(), 2 * n_items * 2);
    EXPECT_EQ(eval_trace.count("chat:judge"), 2 * n_items * 2);

    auto j = report.to_json();
    EXPECT_EQ(j["repeats"], 2);
    ASSERT_EQ(j["strategies"].size(), 2u);
    EXPECT_EQ(j["strategies"][0]["strategy"], "skg_only");
    ASSERT_EQ(j["items"].size(), 2 * n_items);
    EXPECT_EQ(j["items"][0]["qid"], e.items[0].id);
    EXPECT_EQ(j["items"][0]["lm"].size(), 2u);
    EXPECT_TRUE(j["items"][3]["lm"][0].is_null());

    auto md = report.to_markdown();
    EXPECT_EQ(md.rfind("| Strategy | FC (F1) | LM (F1) |", 0), 0u);
    EXPECT_NE(md.find("| skg_tkg_fallback |"), std::string::npos);
    EXPECT_NE(md.find("| Strategy | inverse | multi_condition |"), std::string::npos);
    EXPECT_NE(md.find("\nIndexing tokens: 0\n"), std::string::npos);
}

TEST(RunBenchmark, WorkersDoNotChangeResults) {
    auto& e = env();
    Orchestrator orch(e.built.view(), *e.client);
    BenchmarkOptions opts;
    opts.strategies = {Strategy::TkgOnly, Strategy::Concat};
    opts.judge = false;
    auto serial = run_benchmark(e.items, orch, *e.client, opts, &e.built.skg);
    opts.workers = 4;
    auto threaded = run_benchmark(e.items, orch, *e.client, opts, &e.built.skg);
    EXPECT_EQ(serial.to_json(), threaded.to_json());
    EXPECT_TRUE(serial.judge.empty());
    EXPECT_FALSE(serial.summary[0].laaj);
}

TEST(RunBenchmark, RejectsBadOptions) {
    auto& e = env();
    Orchestrator orch(e.built.view(), *e.client);
    BenchmarkOptions opts;
    EXPECT_THROW(run_benchmark({}, orch, *e.client, opts), EvalError);
    opts.repeats = 0;
    EXPECT_THROW(run_benchmark(e.items, orch, *e.client, opts), EvalError);
    opts.repeats = 1;
    opts.strategies.clear();
    EXPECT_THROW(run_benchmark(e.items, orch, *e.client, opts), EvalError);
    Orchestrator bare({}, *e.client);
    EXPECT_THROW(run_benchmark(e.items, bare, *e.client, BenchmarkOptions{}), ConfigError);
}
