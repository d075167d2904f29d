#include <gtest/gtest.h>

#include <filesystem>

#include "cosine_oracle.hpp"
#include "dualgraph/patterns.hpp"
#include "dualgraph/sparql.hpp"
#include "generators.hpp"

using namespace dualgraph;

namespace {

Term n(std::string_view id) { return Term::iri(vocab::node(id)); }

Graph small_skg() {
    Graph g;
    g.insert(n("s25"), vocab::kVariantOf, n("galaxy_s"));
    g.insert(n("galaxy_s"), vocab::kType, Term::iri(vocab::kProductRange));
    g.insert(n("galaxy_s"), vocab::kBelongs, n("phones"));
    g.insert(n("s25"), vocab::kHasSpec, n("s25__spec0"));
    g.insert(n("s25__spec0"), vocab::kInSection, n("display"));
    g.insert(n("s25__spec0"), vocab::kInEntry, n("refresh_rate"));
    g.insert(n("s25__spec0"), vocab::kHasValue, n("120hz"));
    g.insert(n("refresh_rate"), vocab::kHasName, Term::string("Refresh  Rate"));
    g.insert(n("120hz"), vocab::kHasName, Term::string("120Hz"));
    g.insert(n("s25"), vocab::kHasFeature, n("5g_support"));
    g.insert(n("5g_support"), vocab::kHasName, Term::string("5G Support"));
    return g;
}

}  // namespace

TEST(Patterns, KindNames) {
    for (auto k : kPatternKinds) EXPECT_EQ(parse_kind(kind_name(k)), k);
    EXPECT_FALSE(parse_kind("spec"));
}

TEST(Patterns, ExtractSmallGraph) {
    Graph g = small_skg();
    auto pats = extract_patterns(g);
    std::vector<std::string> ids;
    for (const auto& p : pats) ids.push_back(p.id());
    EXPECT_EQ(ids, (std::vector<std::string>{
                       "Category:skg:galaxy_s|skg:phones",
                       "Feature:skg:5g_support",
                       "SingularNode:skg:120hz",
                       "SingularNode:skg:5g_support",
                       "SingularNode:skg:refresh_rate",
                       "Spec:skg:display|skg:refresh_rate|skg:120hz",
                   }));
    const auto& spec = pats.back();
    EXPECT_EQ(spec.linearization,
              "In the product specification, the Refresh Rate entry in the display section has the value 120Hz");
    EXPECT_EQ(pats[1].linearization, "The product has 5G Support feature");
    EXPECT_EQ(pats[0].linearization, "The product range galaxy_s belongs to the phones category.");
    EXPECT_EQ(pats[2].linearization, "120Hz");
    for (const auto& p : pats) EXPECT_NO_THROW(sparql::parse_bgp_fragment(p.snippet)) << p.snippet;
    EXPECT_THROW(linearize(g, PatternKind::Spec, {"skg:a"}), PatternError);
}

TEST(Patterns, SnippetsSelectTheirOwnNodes) {
    Graph g = small_skg();
    for (const auto& p : extract_patterns(g)) {
        if (p.kind == PatternKind::SingularNode) continue;
        auto rows = sparql::execute(g, sparql::parse_query("SELECT ?p WHERE { " + p.snippet + " }"));
        ASSERT_EQ(rows.rows.size(), 1u) << p.snippet;
        EXPECT_EQ(rows.rows[0][0], n("s25"));
    }
}

TEST(Patterns, ExtractDeduplicatesAndSorts) {
    oracle::Rng rng(3);
    for (int i = 0; i < 10; ++i) {
        Graph g = oracle::random_product_graph(rng, 100);
        auto pats = extract_patterns(g);
        for (std::size_t k = 1; k < pats.size(); ++k) EXPECT_LT(pats[k - 1].id(), pats[k].id());
        // Every spec node with section, entry and value yields its triple.
        for (const auto& spec : g.subjects(vocab::kType, Term::iri(vocab::kSpec))) {
            for (const auto& s : g.objects(spec, vocab::kInSection))
                for (const auto& e : g.objects(spec, vocab::kInEntry))
                    for (const auto& v : g.objects(spec, vocab::kHasValue)) {
                        std::string id = "Spec:" + s.text + "|" + e.text + "|" + v.text;
                        EXPECT_TRUE(std::any_of(pats.begin(), pats.end(), [&](auto& p) { return p.id() == id; }))
                            << id;
                    }
        }
    }
}

TEST(PatternIndex, IndexRetrieveSaveLoad) {
    Graph g = small_skg();
    llm::MockProvider mock;
    llm::UsageAccumulator acc;
    llm::Trace trace;
    llm::LlmClient client(mock, acc, 2);
    auto pats = extract_patterns(g);
    auto index = index_patterns(pats, client, &trace);
    EXPECT_EQ(index.size(), pats.size());
    EXPECT_EQ(index.count(PatternKind::SingularNode), 3u);
    EXPECT_EQ(index.count(PatternKind::Spec), 1u);
    EXPECT_GT(acc.total(llm::Phase::Indexing).prompt_tokens, 0u);
    EXPECT_EQ(acc.calls(llm::Phase::Querying), 0u);

    auto hits = retrieve_patterns(index, client, "phones with a 120Hz refresh rate", 1, &trace);
    ASSERT_EQ(hits.size(), 4u);
    EXPECT_EQ(hits[0].kind, PatternKind::Spec);
    EXPECT_EQ(hits[1].kind, PatternKind::Feature);
    EXPECT_EQ(hits[2].kind, PatternKind::Category);
    EXPECT_EQ(hits[3].id(), "SingularNode:skg:refresh_rate");
    EXPECT_EQ(acc.calls(llm::Phase::Querying), 1u);

    // Per kind, the retrieved ids match a brute-force cosine ranking.
    auto q = llm::hash_embed("refresh rate support");
    for (auto kind : kPatternKinds) {
        std::vector<std::pair<std::string, std::vector<float>>> entries;
        for (const auto& p : pats)
            if (p.kind == kind) entries.push_back({p.id(), llm::hash_embed(p.linearization)});
        auto want = oracle::brute_force_rank(entries, q, 2);
        std::vector<std::string> got;
        for (const auto& p : index.retrieve(q, 2))
            if (p.kind == kind) got.push_back(p.id());
        ASSERT_EQ(got.size(), want.size());
        for (std::size_t i = 0; i < got.size(); ++i) EXPECT_EQ(got[i], want[i].key);
    }

    auto path = (std::filesystem::temp_directory_path() / "dualgraph_patterns.jsonl").string();
    index.save(path);
    auto back = PatternIndex::load(path);
    std::filesystem::remove(path);
    ASSERT_EQ(back.size(), index.size());
    for (const auto& p : index.patterns()) EXPECT_EQ(back.get(p.id()), p);
    EXPECT_THROW(back.get("Spec:nope"), PatternError);
    auto a = index.retrieve(q, 3), b = back.retrieve(q, 3);
    EXPECT_EQ(a, b);
}

TEST(PatternIndex, CapAndDuplicateLinearizations) {
    Graph g = small_skg();
    // A second node with the same display name repeats a linearization.
    g.insert(n("120hz_dup"), vocab::kHasName, Term::string("120Hz"));
    llm::MockProvider mock;
    llm::UsageAccumulator acc;
    llm::LlmClient client(mock, acc);
    auto pats = extract_patterns(g);
    auto index = index_patterns(pats, client);
    EXPECT_EQ(index.count(PatternKind::SingularNode), 3u);
    EXPECT_NO_THROW(index.get("SingularNode:skg:120hz"));
    EXPECT_THROW(index.get("SingularNode:skg:120hz_dup"), PatternError);

    PatternIndexOptions capped;
    capped.max_per_kind = 1;
    auto small = index_patterns(pats, client, nullptr, capped);
    for (auto kind : kPatternKinds) EXPECT_LE(small.count(kind), 1u);
    EXPECT_EQ(small.size(), 4u);
}
