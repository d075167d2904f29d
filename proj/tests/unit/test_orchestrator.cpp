#include <gtest/gtest.h>
#include <unistd.h>

#include <filesystem>
#include <set>

#include "dualgraph/corpus.hpp"
#include "dualgraph/eval.hpp"
#include "dualgraph/orchestrator.hpp"
#include "dualgraph/pipeline.hpp"
#include "dualgraph/text.hpp"

namespace fs = std::filesystem;
using namespace dualgraph;
using nlohmann::json;

namespace {

// Delegates to another provider but fails every call of one prompt kind.
class FailingKind : public llm::Provider {
public:
    FailingKind(llm::Provider& inner, std::string kind) : inner_(inner), kind_(std::move(kind)) {}
    llm::ChatResult chat(const std::string& prompt, const llm::Sampling& s) override {
        auto tag = llm::parse_tag(prompt);
        if (tag && tag->kind == kind_) throw llm::LlmError("refused " + kind_);
        return inner_.chat(prompt, s);
    }
    llm::EmbedResult embed(const std::vector<std::string>& texts) override { return inner_.embed(texts); }
    std::string name() const override { return "failing"; }

private:
    llm::Provider& inner_;
    std::string kind_;
};

struct Env {
    fs::path dir;
    std::vector<QAItem> items;
    json script;
    std::unique_ptr<llm::MockProvider> mock;
    llm::UsageAccumulator usage;
    std::unique_ptr<llm::LlmClient> client;
    BuiltIndexes built;

    const QAItem& item(const std::string& id) const {
        for (const auto& i : items)
            if (i.id == id) return i;
        throw std::runtime_error("no item " + id);
    }
};

Env& env() {
    static std::unique_ptr<Env> e = [] {
        auto e = std::make_unique<Env>();
        e->dir = fs::temp_directory_path() / ("dualgraph_orch_fixture_" + std::to_string(::getpid()));
        fs::remove_all(e->dir);
        gen_fixture_corpus(10, 7, e->dir);
        e->items = load_benchmark((e->dir / "benchmark.json").string());
        e->script = json::parse(text::read_file((e->dir / "mock_script.json").string()));
        e->script["route"] = {{"q1", "SYMBOLIC"}, {"q4", "SYMBOLIC"}, {"q5", "SEMANTIC"}};
        e->script["sparql"]["a1"] = e->script["sparql"]["q1"];
        e->script["agent"] = {{"a1", {"RETRIEVE_SYMBOLIC: Which devices support 5G?", "ANSWER: Galaxy A56\nand more"}},
                              {"a2", {"STOP"}},
                              {"a3", "gibberish"},
                              {"a4", {"ANSWER: first", "REVISE: second"}}};
        e->script["reflect"] = {{"a4", {"REJECT", "ACCEPT"}}};
        e->mock = std::make_unique<llm::MockProvider>(e->script);
        e->client = std::make_unique<llm::LlmClient>(*e->mock, e->usage);
        e->built = build_in_memory(load_corpus(e->dir).corpus, *e->client);
        return e;
    }();
    return *e;
}

std::size_t count_source(const RetrievalContext& c, Source s) {
    std::size_t n = 0;
    for (const auto& b : c.blocks) n += b.source == s;
    return n;
}

bool only(const RetrievalContext& c, Source s) { return !c.empty() && count_source(c, s) == c.blocks.size(); }

std::vector<std::string> details(const llm::Trace& t, std::string_view kind) {
    std::vector<std::string> out;
    for (const auto& e : t.events())
        if (e.kind == kind) out.push_back(e.detail);
    return out;
}

}  // namespace

TEST(Strategy, NamesRoundTrip) {
    ASSERT_EQ(all_strategies().size(), 7u);
    std::set<std::string_view> names;
    for (auto s : all_strategies()) {
        EXPECT_EQ(parse_strategy(strategy_name(s)), s);
        names.insert(strategy_name(s));
        EXPECT_NE(strategy_names().find(strategy_name(s)), std::string::npos);
    }
    EXPECT_EQ(names.size(), 7u);
    EXPECT_EQ(parse_strategy("skg_tkg_fallback"), Strategy::SkgTkgFallback);
    EXPECT_FALSE(parse_strategy("SKG_ONLY"));
    EXPECT_FALSE(parse_strategy(""));
}

TEST(RetrievalContext, RenderAndSources) {
    RetrievalContext c;
    EXPECT_EQ(c.render(), "");
    c.blocks.push_back({Source::Symbolic, "A", "x"});
    RetrievalContext d;
    d.blocks.push_back({Source::Semantic, "B", "y\n"});
    c.append(d);
    EXPECT_EQ(c.render(), "### A\n\nx\n\n### B\n\ny\n");
    EXPECT_TRUE(c.has(Source::Symbolic));
    EXPECT_TRUE(c.has(Source::Semantic));
    EXPECT_FALSE(d.has(Source::Symbolic));
    EXPECT_EQ(source_name(Source::Semantic), "semantic");
}

TEST(Orchestrator, CheckReady) {
    llm::MockProvider mock;
    llm::UsageAccumulator acc;
    llm::LlmClient client(mock, acc);
    Orchestrator none({}, client);
    for (auto s : all_strategies()) EXPECT_THROW(none.check_ready(s), ConfigError) << strategy_name(s);
    EXPECT_THROW(none.answer("q", "anything", Strategy::Concat), ConfigError);
    EXPECT_EQ(acc.total().total(), 0u);

    auto& e = env();
    Orchestrator tkg_only({nullptr, nullptr, &e.built.tkg}, client);
    EXPECT_NO_THROW(tkg_only.check_ready(Strategy::TkgOnly));
    EXPECT_THROW(tkg_only.check_ready(Strategy::SkgOnly), ConfigError);
    EXPECT_THROW(tkg_only.check_ready(Strategy::Router), ConfigError);

    Orchestrator skg_only({&e.built.skg, &e.built.patterns, nullptr}, client);
    EXPECT_NO_THROW(skg_only.check_ready(Strategy::SkgOnly));
    EXPECT_THROW(skg_only.check_ready(Strategy::SkgTkgFallback), ConfigError);
    EXPECT_THROW(skg_only.check_ready(Strategy::Agentic), ConfigError);
    // Symbolic retrieval needs both the graph and the pattern index.
    Orchestrator no_patterns({&e.built.skg, nullptr, &e.built.tkg}, client);
    EXPECT_THROW(no_patterns.check_ready(Strategy::SkgOnly), ConfigError);
    EXPECT_NO_THROW(no_patterns.check_ready(Strategy::TkgOnly));
}

TEST(Orchestrator, SymbolicAnswerMatchesGold) {
    auto& e = env();
    Orchestrator orch(e.built.view(), *e.client);
    const auto& q1 = e.item("q1");
    auto rec = orch.answer(q1.id, q1.question, Strategy::SkgOnly, true);
    ASSERT_TRUE(only(rec.context, Source::Symbolic));
    EXPECT_EQ(rec.context.blocks[0].label, "Query result 1");
    EXPECT_FALSE(rec.fallback_used);
    EXPECT_FALSE(rec.route);
    // One execution per sampling configuration.
    EXPECT_EQ(rec.trace->count("sparql_exec"), orch.config().sampling.size());
    // Gold names from the benchmark appear in the rendered results.
    auto rendered = rec.context.render();
    for (const auto& name : {"Galaxy S25 Ultra", "Galaxy A56", "Galaxy XCover7", "Galaxy Tab S10 FE"})
        EXPECT_NE(rendered.find(name), std::string::npos) << name;
    ASSERT_TRUE(rec.symbolic_answer);
    std::set<std::string> got(rec.symbolic_answer->begin(), rec.symbolic_answer->end());
    std::set<std::string> want(q1.answer_list->begin(), q1.answer_list->end());
    EXPECT_EQ(got, want);

    auto plain = orch.answer(q1.id, q1.question, Strategy::SkgOnly);
    EXPECT_FALSE(plain.symbolic_answer);
    EXPECT_EQ(plain.answer, rec.answer);
}

TEST(Orchestrator, FallbackOnlyWhenSymbolicIsEmpty) {
    auto& e = env();
    Orchestrator orch(e.built.view(), *e.client);
    const auto& q4 = e.item("q4");
    // Every q4 candidate is invalid, so symbolic retrieval comes back empty.
    auto skg = orch.answer(q4.id, q4.question, Strategy::SkgOnly);
    EXPECT_TRUE(skg.context.empty());
    EXPECT_FALSE(skg.fallback_used);
    EXPECT_EQ(skg.trace->count("fallback"), 0u);

    auto fb = orch.answer(q4.id, q4.question, Strategy::SkgTkgFallback);
    EXPECT_TRUE(fb.fallback_used);
    EXPECT_EQ(fb.trace->count("fallback"), 1u);
    EXPECT_TRUE(only(fb.context, Source::Semantic));
    EXPECT_LE(fb.context.blocks.size(), orch.config().k_chunks);

    const auto& q1 = e.item("q1");
    auto no_fb = orch.answer(q1.id, q1.question, Strategy::SkgTkgFallback);
    EXPECT_FALSE(no_fb.fallback_used);
    EXPECT_TRUE(only(no_fb.context, Source::Symbolic));
}

TEST(Orchestrator, ConcatKeepsBothInOrder) {
    auto& e = env();
    Orchestrator orch(e.built.view(), *e.client);
    const auto& q1 = e.item("q1");
    auto rec = orch.answer(q1.id, q1.question, Strategy::Concat);
    auto sym = count_source(rec.context, Source::Symbolic);
    auto sem = count_source(rec.context, Source::Semantic);
    EXPECT_GE(sym, 1u);
    EXPECT_GE(sem, 1u);
    for (std::size_t i = 0; i < rec.context.blocks.size(); ++i)
        EXPECT_EQ(rec.context.blocks[i].source, i < sym ? Source::Symbolic : Source::Semantic);
    auto tkg = orch.answer(q1.id, q1.question, Strategy::TkgOnly);
    EXPECT_TRUE(only(tkg.context, Source::Semantic));
    EXPECT_EQ(tkg.context.blocks.size(), sem);
}

TEST(Orchestrator, RouterFollowsRoute) {
    auto& e = env();
    Orchestrator orch(e.built.view(), *e.client);
    const auto& q1 = e.item("q1");
    const auto& q4 = e.item("q4");
    const auto& q5 = e.item("q5");

    auto r1 = orch.answer(q1.id, q1.question, Strategy::Router);
    ASSERT_TRUE(r1.route);
    EXPECT_EQ(*r1.route, llm::Route::Symbolic);
    EXPECT_TRUE(only(r1.context, Source::Symbolic));

    auto r5 = orch.answer(q5.id, q5.question, Strategy::Router);
    EXPECT_EQ(r5.route, llm::Route::Semantic);
    EXPECT_TRUE(only(r5.context, Source::Semantic));
    EXPECT_EQ(r5.trace->count("sparql_exec"), 0u);

    auto r4 = orch.answer(q4.id, q4.question, Strategy::Router);
    EXPECT_EQ(r4.route, llm::Route::Symbolic);
    EXPECT_TRUE(r4.context.empty());
    EXPECT_FALSE(r4.fallback_used);

    auto f4 = orch.answer(q4.id, q4.question, Strategy::RouterTkgFallback);
    EXPECT_TRUE(f4.fallback_used);
    EXPECT_TRUE(only(f4.context, Source::Semantic));
    // A semantic route never counts as a fallback.
    auto f5 = orch.answer(q5.id, q5.question, Strategy::RouterTkgFallback);
    EXPECT_FALSE(f5.fallback_used);
}

TEST(Orchestrator, AgenticLoop) {
    auto& e = env();
    Orchestrator orch(e.built.view(), *e.client);

    auto a1 = orch.answer("a1", "What has 5G?", Strategy::Agentic);
    EXPECT_EQ(a1.agent_steps, 2u);
    EXPECT_EQ(a1.answer, "Galaxy A56\nand more");
    EXPECT_TRUE(only(a1.context, Source::Symbolic));
    EXPECT_EQ(a1.trace->count("chat:reflect"), 1u);
    EXPECT_EQ(a1.trace->count("chat:answer"), 0u);

    auto a2 = orch.answer("a2", "Anything?", Strategy::Agentic);
    EXPECT_EQ(a2.agent_steps, 1u);
    EXPECT_EQ(a2.answer, kNoAnswer);
    EXPECT_EQ(a2.trace->count("agent_stop"), 1u);

    auto a3 = orch.answer("a3", "Anything?", Strategy::Agentic);
    EXPECT_EQ(a3.agent_steps, orch.config().max_steps);
    EXPECT_EQ(a3.trace->count("agent_invalid_action"), orch.config().max_steps);
    EXPECT_EQ(a3.answer, kNoAnswer);
    EXPECT_TRUE(a3.context.empty());

    // The first answer is rejected, the revision accepted.
    auto a4 = orch.answer("a4", "Anything?", Strategy::Agentic);
    EXPECT_EQ(a4.agent_steps, 2u);
    EXPECT_EQ(a4.answer, "second");
    EXPECT_EQ(a4.trace->count("chat:reflect"), 2u);

    OrchestratorConfig short_cfg;
    short_cfg.max_steps = 2;
    Orchestrator brief(e.built.view(), *e.client, short_cfg);
    EXPECT_EQ(brief.answer("a3", "Anything?", Strategy::Agentic).agent_steps, 2u);
}

TEST(Orchestrator, ProviderFailureDegradesGracefully) {
    auto& e = env();
    FailingKind failing(*e.mock, "sparql");
    llm::UsageAccumulator acc;
    llm::LlmClient client(failing, acc);
    Orchestrator orch(e.built.view(), client);
    const auto& q1 = e.item("q1");

    auto rec = orch.answer(q1.id, q1.question, Strategy::SkgOnly);
    EXPECT_TRUE(rec.context.empty());
    auto d = details(*rec.trace, "retrieve_symbolic");
    ASSERT_EQ(d.size(), 1u);
    EXPECT_EQ(d[0].rfind("provider failure: ", 0), 0u) << d[0];

    auto fb = orch.answer(q1.id, q1.question, Strategy::SkgTkgFallback);
    EXPECT_TRUE(fb.fallback_used);
    EXPECT_TRUE(only(fb.context, Source::Semantic));

    // A failing answer call leaves an empty answer and a trace event.
    FailingKind no_answer(*e.mock, "answer");
    llm::LlmClient client2(no_answer, acc);
    Orchestrator orch2(e.built.view(), client2);
    auto empty = orch2.answer(q1.id, q1.question, Strategy::TkgOnly);
    EXPECT_EQ(empty.answer, "");
    EXPECT_EQ(empty.trace->count("answer_failed"), 1u);
}

TEST(Orchestrator, UsageMatchesAccumulatorAndJson) {
    auto& e = env();
    llm::UsageAccumulator acc;
    llm::LlmClient client(*e.mock, acc);
    Orchestrator orch(e.built.view(), client);
    const auto& q1 = e.item("q1");
    auto rec = orch.answer(q1.id, q1.question, Strategy::Router, true);
    auto u = rec.usage();
    EXPECT_EQ(u.querying, acc.total(llm::Phase::Querying));
    EXPECT_EQ(u.evaluation, acc.total(llm::Phase::Evaluation));
    EXPECT_GT(u.querying.prompt_tokens, 0u);
    EXPECT_GT(u.evaluation.total(), 0u);
    EXPECT_EQ(u.indexing.total(), 0u);

    auto j = rec.to_json();
    EXPECT_EQ(j["qid"], "q1");
    EXPECT_EQ(j["strategy"], "router");
    EXPECT_EQ(j["route"], "symbolic");
    EXPECT_EQ(j["answer"], rec.answer);
    EXPECT_FALSE(j.contains("agent_steps"));
    EXPECT_EQ(j["context"].size(), rec.context.blocks.size());
    EXPECT_EQ(j["context"][0]["source"], "symbolic");
    EXPECT_EQ(j["usage"]["querying"]["total_tokens"], u.querying.total());
    EXPECT_TRUE(j["symbolic_answer"].is_array());

    auto agent = orch.answer("a2", "Anything?", Strategy::Agentic).to_json();
    EXPECT_EQ(agent["agent_steps"], 1);
    EXPECT_TRUE(agent["symbolic_answer"].is_null());
    EXPECT_FALSE(agent.contains("route"));
}
