#include <gtest/gtest.h>

#include <filesystem>

#include "cosine_oracle.hpp"
#include "dualgraph/tkg.hpp"

using namespace dualgraph;

namespace {

Chunk chunk(std::string id, std::string body) {
    Chunk c;
    c.id = std::move(id);
    c.doc_id = "doc";
    c.text = std::move(body);
    return c;
}

Entity entity(std::string id, std::vector<std::string> chunks) {
    Entity e;
    e.id = id;
    e.name = id;
    e.description = "about " + id;
    e.chunk_ids = std::move(chunks);
    return e;
}

// e1 -> {c1, c2}, e2 -> {c2}, e3 -> {c3}
EntityGraph three() {
    std::vector<Chunk> chunks = {chunk("c1", "one"), chunk("c2", "two"), chunk("c3", "three")};
    return EntityGraph::assemble({entity("e1", {"c1", "c2"}), entity("e2", {"c2"}), entity("e3", {"c3"})}, chunks,
                                 {{1, 0}, {0, 1}, {1, 1}});
}

std::vector<std::pair<std::string, double>> flat(const std::vector<ChunkScore>& v) {
    std::vector<std::pair<std::string, double>> out;
    for (const auto& s : v) out.emplace_back(s.chunk_id, s.score);
    return out;
}

using Flat = std::vector<std::pair<std::string, double>>;

class ScriptedEntities : public llm::Provider {
public:
    int calls = 0;
    llm::ChatResult chat(const std::string& prompt, const llm::Sampling&) override {
        ++calls;
        auto tag = llm::parse_tag(prompt);
        auto body = llm::prompt_section(prompt, "text");
        if (body == "garbage") return {"I cannot help", {}};
        if (body == "flaky" && tag && tag->index == 0) return {"???", {}};
        if (body == "flaky") return {"Flaky Thing :: recovered", {}};
        return {body + " Phone :: a phone\nShared Tech :: from " + body, {}};
    }
    llm::EmbedResult embed(const std::vector<std::string>& texts) override {
        llm::EmbedResult r;
        for (const auto& t : texts) r.vectors.push_back(llm::hash_embed(t, 32));
        return r;
    }
    std::string name() const override { return "scripted"; }
};

}  // namespace

TEST(Votes, InverseRankAndLinear) {
    auto g = three();
    std::vector<SearchHit> ranked = {{"e1", 0.9}, {"e2", 0.5}, {"e3", 0.1}};
    EXPECT_EQ(flat(vote_chunks(g, ranked)), (Flat{{"c2", 1.5}, {"c1", 1.0}, {"c3", 1.0 / 3.0}}));
    EXPECT_EQ(flat(vote_chunks(g, ranked, VoteWeighting::Linear)), (Flat{{"c2", 5.0}, {"c1", 3.0}, {"c3", 1.0}}));
    EXPECT_EQ(flat(vote_chunks(g, ranked, VoteWeighting::Linear, 10)),
              (Flat{{"c2", 19.0}, {"c1", 10.0}, {"c3", 8.0}}));
    // Equal scores fall back to chunk id; unknown entities are ignored.
    EXPECT_EQ(flat(vote_chunks(g, {{"ghost", 1.0}, {"e1", 0.5}})), (Flat{{"c1", 0.5}, {"c2", 0.5}}));
    EXPECT_TRUE(vote_chunks(g, {}).empty());
}

TEST(Votes, ScoreChunksUsesIndexRanking) {
    auto g = three();
    // Cosines with (1, 0.2): e1 highest, then e3, then e2.
    auto got = score_chunks(g, {1.0f, 0.2f}, 3, 2);
    std::vector<std::pair<std::string, std::vector<float>>> entries = {{"e1", {1, 0}}, {"e2", {0, 1}}, {"e3", {1, 1}}};
    auto rank = oracle::brute_force_rank(entries, {1.0f, 0.2f}, 3);
    ASSERT_EQ(rank[0].key, "e1");
    ASSERT_EQ(rank[1].key, "e3");
    ASSERT_EQ(rank[2].key, "e2");
    // c2 gets 1 + 1/3, c1 gets 1, c3 gets 1/2.
    ASSERT_EQ(got.size(), 2u);
    EXPECT_EQ(got[0].chunk_id, "c2");
    EXPECT_DOUBLE_EQ(got[0].score, 1.0 + 1.0 / 3.0);
    EXPECT_EQ(got[1].chunk_id, "c1");
    EXPECT_TRUE(score_chunks(EntityGraph{}, {1.0f}, 3, 2).empty());
}

TEST(EntityGraph, AssembleValidates) {
    std::vector<Chunk> chunks = {chunk("c1", "x")};
    EXPECT_THROW(EntityGraph::assemble({entity("a", {"c1"})}, chunks, {}), TkgError);
    EXPECT_THROW(EntityGraph::assemble({entity("a", {})}, chunks, {{1}}), TkgError);
    EXPECT_THROW(EntityGraph::assemble({entity("a", {"c9"})}, chunks, {{1}}), TkgError);
    EXPECT_THROW(EntityGraph::assemble({entity("a", {"c1"}), entity("a", {"c1"})}, chunks, {{1}, {1}}), TkgError);
}

TEST(EntityGraph, SaveLoad) {
    auto g = three();
    auto dir = std::filesystem::temp_directory_path();
    auto jsonl = (dir / "dualgraph_entities.jsonl").string();
    auto vec = (dir / "dualgraph_entities.vec").string();
    g.save(jsonl, vec);
    auto back = EntityGraph::load(jsonl, vec);
    EXPECT_EQ(back.entities(), g.entities());
    ASSERT_EQ(back.chunks().size(), 3u);
    EXPECT_EQ(back.chunk("c2")->text, "two");
    EXPECT_EQ(back.chunk("zz"), nullptr);
    EXPECT_EQ(flat(score_chunks(back, {1.0f, 0.2f}, 3, 3)), flat(score_chunks(g, {1.0f, 0.2f}, 3, 3)));
    std::filesystem::remove(jsonl);
    std::filesystem::remove(vec);
}

TEST(Extraction, RetryAndMerge) {
    ScriptedEntities p;
    llm::UsageAccumulator acc;
    llm::Trace trace;
    llm::LlmClient client(p, acc, 2);
    std::vector<Chunk> chunks = {chunk("d#0", "Alpha"), chunk("d#1", "garbage"), chunk("d#2", "  "),
                                 chunk("d#3", "flaky"), chunk("d#4", "Beta")};
    std::vector<std::string> diag;
    auto mentions = extract_all(chunks, client, &trace, &diag);
    ASSERT_EQ(mentions.size(), 5u);
    EXPECT_EQ(mentions[0].mentions.size(), 2u);
    EXPECT_TRUE(mentions[1].mentions.empty());
    EXPECT_TRUE(mentions[2].mentions.empty());
    ASSERT_EQ(mentions[3].mentions.size(), 1u);
    EXPECT_EQ(mentions[3].mentions[0].description, "recovered");
    ASSERT_EQ(diag.size(), 1u);
    EXPECT_EQ(diag[0].rfind("d#1", 0), 0u);
    // Four chunks with text, then retries for garbage and flaky.
    EXPECT_EQ(p.calls, 6);
    EXPECT_EQ(acc.calls(llm::Phase::Indexing), 6u);

    auto single = extract_entities(chunks[3], client);
    ASSERT_EQ(single.size(), 1u);

    auto entities = merge_entities(mentions);
    ASSERT_EQ(entities.size(), 4u);
    EXPECT_EQ(entities[0].id, "alpha_phone");
    EXPECT_EQ(entities[1].id, "shared_tech");
    EXPECT_EQ(entities[1].chunk_ids, (std::vector<std::string>{"d#0", "d#4"}));
    EXPECT_EQ(entities[1].description, "from Alpha\nfrom Beta");
    EXPECT_EQ(entities[2].id, "flaky_thing");

    auto graph = build_entity_graph(entities, chunks, client, &trace);
    EXPECT_EQ(graph.entities().size(), 4u);
    EXPECT_EQ(graph.index().size(), 4u);
    auto hits = retrieve_chunks(graph, client, "Alpha Beta", 1, 5, VoteWeighting::InverseRank, &trace);
    ASSERT_EQ(hits.size(), 2u);
    EXPECT_EQ(hits[0].id, "d#0");
    EXPECT_EQ(hits[1].id, "d#4");
}

TEST(Align, TypesMatchingNodes) {
    Graph skg;
    skg.insert(Term::iri("skg:alpha_phone"), vocab::kType, Term::iri(vocab::kProduct));
    skg.insert(Term::iri("skg:alpha_phone"), vocab::kHasSpec, Term::iri("skg:e2"));
    std::vector<Chunk> chunks = {chunk("c1", "x")};
    auto g = EntityGraph::assemble({entity("alpha_phone", {"c1"}), entity("e2", {"c1"}), entity("absent", {"c1"})},
                                   chunks, {{1}, {1}, {1}});
    EXPECT_EQ(align(g, skg), 1u);
    EXPECT_TRUE(skg.has_class(Term::iri("skg:alpha_phone"), vocab::kUtkgEntity));
    EXPECT_EQ(skg.objects(Term::iri("skg:alpha_phone"), vocab::kHasDescription),
              std::vector<Term>{Term::string("about alpha_phone")});
    EXPECT_FALSE(skg.has_class(Term::iri("skg:e2"), vocab::kUtkgEntity));
}
